//! Binary noise channels and the entropy/divergence primitives.
//!
//! Logs are natural. `0·log 0 = 0` and `log(1/0) = ∞`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn from_f64(x: f64) -> Self {
        debug_assert!(!x.is_nan());
        if x == f64::INFINITY {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite(x)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            ExtendedReal::Finite(x) => x,
            ExtendedReal::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    /// `0·∞ = 0`.
    pub fn scale(self, a: f64) -> Self {
        match self {
            _ if a == 0.0 => ExtendedReal::Finite(0.0),
            ExtendedReal::Infinite => ExtendedReal::Infinite,
            ExtendedReal::Finite(x) => ExtendedReal::Finite(a * x),
        }
    }
}

impl std::ops::Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::Infinite,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::Infinite => write!(f, "inf"),
        }
    }
}

fn check_prob(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{z} is not a probability")))
    }
}

/// `x·log x` with `0·log 0 = 0`.
#[inline]
fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary entropy in nats.
pub fn entropy(z: f64) -> Result<f64> {
    check_prob(z)?;
    Ok(h(z))
}

/// Unchecked binary entropy for hot paths.
#[inline]
pub fn h(z: f64) -> f64 {
    -xlogx(z) - xlogx(1.0 - z)
}

/// `y·log(y/z)` with the extended conventions.
#[inline]
fn term(y: f64, z: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if z <= 0.0 {
        f64::INFINITY
    } else {
        y * (y / z).ln()
    }
}

/// Binary Kullback-Leibler divergence `KL(y‖z)`.
pub fn kl_div(y: f64, z: f64) -> Result<ExtendedReal> {
    check_prob(y)?;
    check_prob(z)?;
    Ok(ExtendedReal::from_f64(kl(y, z)))
}

/// Unchecked divergence, `f64::INFINITY` for support mismatch.
#[inline]
pub fn kl(y: f64, z: f64) -> f64 {
    if y == z {
        return 0.0;
    }
    let v = term(y, z) + term(1.0 - y, 1.0 - z);
    // rounding can leave tiny negatives near y ≈ z
    v.max(0.0)
}

/// The channel `p = (p00, p01, p10, p11)`; `p_ab` is the probability that a
/// test with actual result `a` displays `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
}

impl NoiseChannel {
    /// Rows that sum to one within `1e-12` are renormalized; anything else
    /// is rejected, as is `p11 <= p01`.
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        for (name, v) in [("p00", p00), ("p01", p01), ("p10", p10), ("p11", p11)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidChannel(format!("{name}={v} outside [0,1]")));
            }
        }
        let r0 = p00 + p01;
        let r1 = p10 + p11;
        if (r0 - 1.0).abs() > 1e-12 || (r1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidChannel(format!(
                "rows must sum to 1 (got {r0}, {r1})"
            )));
        }
        let (p00, p01) = (p00 / r0, p01 / r0);
        let (p10, p11) = (p10 / r1, p11 / r1);
        if p11 <= p01 {
            return Err(Error::InvalidChannel(format!(
                "need p11 > p01 (got p11={p11}, p01={p01})"
            )));
        }
        Ok(Self { p00, p01, p10, p11 })
    }

    pub fn noiseless() -> Self {
        Self { p00: 1.0, p01: 0.0, p10: 0.0, p11: 1.0 }
    }

    /// Symmetric channel with flip probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(1.0 - p, p, p, 1.0 - p)
    }

    /// Perfect specificity, sensitivity `p11`.
    pub fn z(p11: f64) -> Result<Self> {
        Self::new(1.0, 0.0, 1.0 - p11, p11)
    }

    pub fn p00(&self) -> f64 {
        self.p00
    }
    pub fn p01(&self) -> f64 {
        self.p01
    }
    pub fn p10(&self) -> f64 {
        self.p10
    }
    pub fn p11(&self) -> f64 {
        self.p11
    }

    pub fn is_symmetric(&self) -> bool {
        (self.p00 - self.p11).abs() < 1e-15
    }

    /// Probability of displaying `b` given actual result `a`.
    pub fn prob(&self, a: bool, b: bool) -> f64 {
        match (a, b) {
            (false, false) => self.p00,
            (false, true) => self.p01,
            (true, false) => self.p10,
            (true, true) => self.p11,
        }
    }

    /// Displayed bit for actual bit `actual` given a uniform variate in `[0,1)`.
    #[inline]
    pub fn transmit(&self, actual: bool, u: f64) -> bool {
        if actual {
            u < self.p11
        } else {
            u < self.p01
        }
    }
}

impl fmt::Display for NoiseChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.p00, self.p01, self.p10, self.p11)
    }
}

impl FromStr for NoiseChannel {
    type Err = Error;

    /// `p00,p01,p10,p11`, `bsc:<p>`, `z:<p11>` or `noiseless`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{t}' in channel '{s}'")))
        };
        if s.eq_ignore_ascii_case("noiseless") {
            return Ok(Self::noiseless());
        }
        if let Some(p) = s.strip_prefix("bsc:") {
            return Self::bsc(num(p)?);
        }
        if let Some(p) = s.strip_prefix("z:") {
            return Self::z(num(p)?);
        }
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("channel '{s}' needs 4 comma-separated entries")));
        }
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?, num(parts[3])?)
    }
}

/// `φ = (h(p00) − h(p10)) / (p00 − p10)`.
pub fn phi(ch: &NoiseChannel) -> f64 {
    (h(ch.p00) - h(ch.p10)) / (ch.p00 - ch.p10)
}

/// `(1 − tanh(φ/2))/2`, the capacity-achieving displayed-negative rate.
fn centre(ch: &NoiseChannel) -> f64 {
    0.5 * (1.0 - (0.5 * phi(ch)).tanh())
}

/// `c_Sh = 1 / KL(p10 ‖ (1 − tanh(φ/2))/2)`.
pub fn shannon_constant(ch: &NoiseChannel) -> f64 {
    1.0 / kl(ch.p10, centre(ch))
}

/// Test density at which a test carries the most information.
pub fn d_shannon(ch: &NoiseChannel) -> Result<f64> {
    let c = centre(ch);
    if c <= ch.p10 {
        return Err(Error::InvalidChannel(format!(
            "degenerate channel: centre {c} <= p10 {}",
            ch.p10
        )));
    }
    Ok((ch.p11 - ch.p01).ln() - (c - ch.p10).ln())
}

/// `(q0−, q0+)`: probabilities that a test displays negative / positive at density `d`.
pub fn marginal_output_rates(ch: &NoiseChannel, d: f64) -> (f64, f64) {
    let e = (-d).exp();
    let q0m = e * ch.p00 + (1.0 - e) * ch.p10;
    (q0m, 1.0 - q0m)
}

/// Mutual information between a test's actual and displayed result at density `d`.
pub fn mutual_info_rate(ch: &NoiseChannel, d: f64) -> f64 {
    let e = (-d).exp();
    let (q0m, _) = marginal_output_rates(ch, d);
    h(q0m) - e * h(ch.p00) - (1.0 - e) * h(ch.p10)
}

/// Free-function form of [`NoiseChannel::transmit`].
pub fn transmit(ch: &NoiseChannel, actual: bool, u: f64) -> bool {
    ch.transmit(actual, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert!((entropy(0.5).unwrap() - LN2).abs() < 1e-15);
        assert!((entropy(0.1).unwrap() - 0.325_082_973_391_448_24).abs() < 1e-15);
        assert!(entropy(1.1).is_err());
        assert!(entropy(-0.1).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_div(0.37, 0.37).unwrap(), ExtendedReal::Finite(0.0));
        assert!((kl_div(0.0, 0.5).unwrap().value() - LN2).abs() < 1e-15);
        assert!(kl_div(0.3, 0.0).unwrap().is_infinite());
        assert!(kl_div(0.3, 1.0).unwrap().is_infinite());
        assert_eq!(kl_div(0.0, 0.0).unwrap().value(), 0.0);
        assert!(kl_div(0.5, 2.0).is_err());
    }

    #[test]
    fn kl_nonnegative_on_grid() {
        for i in 0..=100 {
            for j in 0..=100 {
                let (y, z) = (i as f64 / 100.0, j as f64 / 100.0);
                let v = kl(y, z);
                assert!(v >= 0.0);
                assert_eq!(v == 0.0, i == j, "y={y} z={z} v={v}");
            }
        }
    }

    #[test]
    fn extended_arithmetic() {
        let inf = ExtendedReal::Infinite;
        assert_eq!(inf + inf, inf);
        assert_eq!(inf.scale(0.0), ExtendedReal::Finite(0.0));
        assert_eq!(ExtendedReal::Finite(2.0).scale(3.0), ExtendedReal::Finite(6.0));
        assert!(ExtendedReal::Finite(1e300) < inf);
    }

    #[test]
    fn channel_construction() {
        assert!(NoiseChannel::new(0.5, 0.5, 0.5, 0.5).is_err());
        assert!(NoiseChannel::new(0.9, 0.2, 0.1, 0.9).is_err());
        assert!(NoiseChannel::new(0.1, 0.9, 0.9, 0.1).is_err());
        let ch = NoiseChannel::new(0.9, 0.1 + 5e-13, 0.1, 0.9).unwrap();
        assert!((ch.p00() + ch.p01() - 1.0).abs() < 1e-15);
        assert_eq!("bsc:0.1".parse::<NoiseChannel>().unwrap(), NoiseChannel::bsc(0.1).unwrap());
        let z: NoiseChannel = "z:0.9".parse().unwrap();
        assert_eq!((z.p00(), z.p01()), (1.0, 0.0));
        assert!((z.p10() - 0.1).abs() < 1e-15);
        let g: NoiseChannel = "0.95, 0.05, 0.1, 0.9".parse().unwrap();
        assert_eq!(g.p01(), 0.05);
        assert!("0.9,0.1".parse::<NoiseChannel>().is_err());
        assert!("bsc:x".parse::<NoiseChannel>().is_err());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&NoiseChannel::bsc(0.1).unwrap()), 0.0);
        assert_eq!(phi(&NoiseChannel::noiseless()), 0.0);
        let z = NoiseChannel::new(1.0, 0.0, 0.1, 0.9).unwrap();
        assert!((phi(&z) + 0.361_203_303_768_275_82).abs() < 1e-14);
    }

    #[test]
    fn shannon_examples() {
        assert!((shannon_constant(&NoiseChannel::noiseless()) - 1.0 / LN2).abs() < 1e-12);
        let b = NoiseChannel::bsc(0.1).unwrap();
        assert!((shannon_constant(&b) - 2.716_917_267_486_994_2).abs() < 1e-12);
        let b = NoiseChannel::bsc(0.01).unwrap();
        assert!((shannon_constant(&b) - 1.569_499_856_047_197_7).abs() < 1e-12);
    }

    #[test]
    fn d_shannon_examples() {
        assert!((d_shannon(&NoiseChannel::noiseless()).unwrap() - LN2).abs() < 1e-14);
        assert!((d_shannon(&NoiseChannel::bsc(0.3).unwrap()).unwrap() - LN2).abs() < 1e-14);
        for i in 1..=9 {
            let z = NoiseChannel::z(i as f64 / 10.0).unwrap();
            assert!((-d_shannon(&z).unwrap()).exp() > 0.5);
        }
    }

    #[test]
    fn marginal_rates() {
        let (a, b) = marginal_output_rates(&NoiseChannel::noiseless(), LN2);
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let ch = NoiseChannel::new(0.95, 0.05, 0.1, 0.9).unwrap();
        let (a, b) = marginal_output_rates(&ch, 1e-12);
        assert!((a - 0.95).abs() < 1e-10 && (b - 0.05).abs() < 1e-10);
        let (a, _) = marginal_output_rates(&NoiseChannel::bsc(0.1).unwrap(), LN2);
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mutual_info_examples() {
        assert!((mutual_info_rate(&NoiseChannel::noiseless(), LN2) - LN2).abs() < 1e-15);
        let b = NoiseChannel::bsc(0.1).unwrap();
        assert!((mutual_info_rate(&b, LN2) - 0.368_064_207_168_497_07).abs() < 1e-14);
        let ch = NoiseChannel::new(0.95, 0.05, 0.1, 0.9).unwrap();
        assert!(mutual_info_rate(&ch, 1e-12).abs() < 1e-9);
    }

    #[test]
    fn mutual_info_max_at_d_shannon() {
        for ch in [
            NoiseChannel::new(0.95, 0.05, 0.1, 0.9).unwrap(),
            NoiseChannel::z(0.7).unwrap(),
            NoiseChannel::bsc(0.2).unwrap(),
            NoiseChannel::new(0.8, 0.2, 0.05, 0.95).unwrap(),
        ] {
            let ds = d_shannon(&ch).unwrap();
            let best = mutual_info_rate(&ch, ds);
            for i in 1..=1000 {
                let d = i as f64 * 0.008;
                assert!(mutual_info_rate(&ch, d) <= best + 1e-9);
            }
        }
    }

    #[test]
    fn transmit_rules() {
        let nl = NoiseChannel::noiseless();
        let z = NoiseChannel::z(0.9).unwrap();
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            assert!(nl.transmit(true, u));
            assert!(!nl.transmit(false, u));
            assert!(!z.transmit(false, u));
        }
        let ch = NoiseChannel::new(0.95, 0.05, 0.1, 0.9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let hits = (0..1_000_000).filter(|_| transmit(&ch, true, rng.gen::<f64>())).count();
        assert!((hits as f64 / 1e6 - 0.9).abs() < 1e-3);
    }

    fn channel_strategy() -> impl Strategy<Value = NoiseChannel> {
        (0.0..1.0f64, 0.0..1.0f64).prop_filter_map("p11 > p01", |(p01, p11)| {
            NoiseChannel::new(1.0 - p01, p01, 1.0 - p11, p11).ok().filter(|c| c.p11() - c.p01() > 1e-3)
        })
    }

    proptest! {
        #[test]
        fn capacity_identity(ch in channel_strategy()) {
            let ds = d_shannon(&ch).unwrap();
            let prod = shannon_constant(&ch) * mutual_info_rate(&ch, ds);
            prop_assert!((prod - 1.0).abs() < 1e-9, "{ch} -> {prod}");
        }

        #[test]
        fn kl_is_nonnegative(y in 0.0..=1.0f64, z in 0.0..=1.0f64) {
            prop_assert!(kl(y, z) >= 0.0);
        }

        #[test]
        fn entropy_symmetric(z in 0.0..=1.0f64) {
            prop_assert!((h(z) - h(1.0 - z)).abs() < 1e-15);
        }
    }
}
