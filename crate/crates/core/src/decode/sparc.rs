//! Compartment-by-compartment decoding of the coupled design.
//!
//! The seed `V[1..s]` is decoded by DD on `F[0]`; every later compartment is
//! scored against the labels already fixed. A test in `F[i+j-1]` is
//! informative towards `V[i]` when none of its diagnosed members is labelled
//! infected. On the ring, compartments past `ℓ` wrap around to the seed and
//! are already diagnosed, so the weight index is the number of still
//! undiagnosed compartments feeding the test, `min(j, ℓ-i+1)`.

use super::{dd_decode_restricted, Estimate, Label};
use crate::channel::{ExtendedReal, NoiseChannel};
use crate::design::TestDesign;
use crate::error::{Error, Result};
use crate::rates::DdRate;

/// `w_j^+` and `w_j^-` for `j = 1..=s` (index `j-1`).
pub fn sparc_weights(ch: &NoiseChannel, d: f64, s: usize) -> (Vec<f64>, Vec<ExtendedReal>) {
    let (p00, p01, p10, p11) = (ch.p00(), ch.p01(), ch.p10(), ch.p11());
    let mut wp = Vec::with_capacity(s);
    let mut wm = Vec::with_capacity(s);
    for j in 1..=s {
        let e = (-d * j as f64 / s as f64).exp();
        wp.push((p11 / (p11 + (p01 - p11) * e)).ln());
        wm.push(if p10 <= 0.0 {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite(-(p10 / (p10 + (p00 - p10) * e)).ln())
        });
    }
    (wp, wm)
}

/// Expected `W_x^±` of an infected individual: each of the `s` blocks holds
/// `Δ/s` of its tests, informative with probability `e^{d(j-s)/s}`.
pub fn expected_scores(ch: &NoiseChannel, delta: usize, d: f64, s: usize, wp: &[f64], wm: &[ExtendedReal]) -> (f64, ExtendedReal) {
    let js: Vec<usize> = (1..=s).collect();
    expected_with_index(ch, delta, d, s, wp, wm, &js)
}

fn expected_with_index(
    ch: &NoiseChannel,
    delta: usize,
    d: f64,
    s: usize,
    wp: &[f64],
    wm: &[ExtendedReal],
    eff_j: &[usize],
) -> (f64, ExtendedReal) {
    let per = delta as f64 / s as f64;
    let mut plus = 0.0;
    let mut minus = ExtendedReal::Finite(0.0);
    for &j in eff_j {
        let informative = (d * (j as f64 - s as f64) / s as f64).exp();
        plus += per * ch.p11() * informative * wp[j - 1];
        minus = minus + wm[j - 1].scale(per * ch.p10() * informative);
    }
    (plus, minus)
}

#[derive(Debug, Clone)]
pub struct SparcConfig {
    pub zeta: f64,
    pub vplus_tolerance: f64,
    pub w_plus: Vec<f64>,
    pub w_minus: Vec<ExtendedReal>,
    pub w_plus_expected: f64,
    pub w_minus_expected: ExtendedReal,
    /// Seed DD thresholds.
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
}

/// `clamp(1/log log log n, 0.05, 0.5)`.
pub fn default_zeta(n: usize) -> f64 {
    let lll = (n as f64).ln().ln().ln();
    if lll <= 0.0 {
        return 0.5;
    }
    (1.0 / lll).clamp(0.05, 0.5)
}

impl SparcConfig {
    /// Defaults for a coupled design at effective density `d`.
    pub fn new(ch: &NoiseChannel, design: &TestDesign, d: f64, dd: &DdRate) -> Result<Self> {
        let sc = design.sc.as_ref().ok_or_else(|| Error::Domain("SPARC needs a coupled design".into()))?;
        let (wp, wm) = sparc_weights(ch, d, sc.s);
        let (ep, em) = expected_scores(ch, design.delta, d, sc.s, &wp, &wm);
        Ok(Self {
            zeta: default_zeta(design.n),
            vplus_tolerance: (design.n as f64).ln().powf(4.0 / 7.0),
            w_plus: wp,
            w_minus: wm,
            w_plus_expected: ep,
            w_minus_expected: em,
            alpha: dd.alpha,
            beta: dd.beta,
            d,
        })
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn with_tolerance_multiplier(mut self, mult: f64) -> Self {
        self.vplus_tolerance *= mult;
        self
    }
}

/// Whether `x` sees about `Δ p11 / s` positive tests in each of its blocks.
pub fn plausible_set(design: &TestDesign, displayed: &[bool], ch: &NoiseChannel, x: usize, tolerance: f64) -> bool {
    let Some(sc) = design.sc.as_ref() else { return false };
    let i = sc.ind_comp[x] as usize;
    let mut pos = vec![0usize; sc.s];
    for &a in &design.individuals[x] {
        let f = sc.test_comp[a as usize] as usize;
        if f == 0 {
            continue;
        }
        let j = (f + sc.ell - i) % sc.ell;
        if j < sc.s && displayed[a as usize] {
            pos[j] += 1;
        }
    }
    let target = design.delta as f64 * ch.p11() / sc.s as f64;
    pos.iter().map(|&c| (c as f64 - target).abs()).sum::<f64>() <= tolerance
}

pub fn sparc_decode(design: &TestDesign, displayed: &[bool], ch: &NoiseChannel, cfg: &SparcConfig) -> Result<Estimate> {
    let sc = design.sc.as_ref().ok_or_else(|| Error::Domain("SPARC needs a coupled design".into()))?;
    let n = design.n;
    let (ell, s) = (sc.ell, sc.s);

    let seed: Vec<u32> = (0..n as u32).filter(|&x| sc.is_seed(x as usize)).collect();
    let seed_labels = dd_decode_restricted(design, displayed, cfg.alpha, cfg.beta, sc.delta0, &seed, |a| sc.test_comp[a] == 0);
    let mut tau = vec![Label::Undetermined; n];
    for (&x, l) in seed.iter().zip(&seed_labels) {
        tau[x as usize] = *l;
    }
    if tau.iter().zip(0..n).any(|(l, x)| sc.is_seed(x) && *l == Label::Undetermined) {
        return Err(Error::Domain("seed DD left undetermined labels".into()));
    }

    // number of members labelled infected so far, per test
    let mut infected_in = vec![0u32; design.m_total()];
    for &x in &seed {
        if tau[x as usize] == Label::One {
            for &a in &design.individuals[x as usize] {
                infected_in[a as usize] += 1;
            }
        }
    }

    let p10_zero = ch.p10() <= 0.0;
    let wm: Vec<f64> = cfg.w_minus.iter().map(|w| w.value()).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ell + 1];
    for x in 0..n {
        members[sc.ind_comp[x] as usize].push(x);
    }
    for i in s + 1..=ell {
        let eff: Vec<usize> = (1..=s).map(|j| j.min(ell - i + 1)).collect();
        let (ep, em) = expected_with_index(ch, design.delta, cfg.d, s, &cfg.w_plus, &cfg.w_minus, &eff);
        let mut newly = Vec::new();
        for &x in &members[i] {
            let mut wplus = 0.0;
            let mut wminus = 0.0;
            let mut negatives = 0usize;
            for &a in &design.individuals[x] {
                let a = a as usize;
                let f = sc.test_comp[a] as usize;
                if f == 0 || infected_in[a] > 0 {
                    continue;
                }
                let j = (f + ell - i) % ell;
                if j >= s {
                    continue;
                }
                let jj = eff[j];
                if displayed[a] {
                    wplus += cfg.w_plus[jj - 1];
                } else {
                    negatives += 1;
                    if !p10_zero {
                        wminus += wm[jj - 1];
                    }
                }
            }
            let too_negative = if p10_zero {
                negatives > 0
            } else {
                wminus > (1.0 + cfg.zeta) * em.value()
            };
            let zero = !plausible_set(design, displayed, ch, x, cfg.vplus_tolerance)
                || wplus < (1.0 - cfg.zeta) * ep
                || too_negative;
            tau[x] = if zero { Label::Zero } else { Label::One };
            if !zero {
                newly.push(x);
            }
        }
        for x in newly {
            for &a in &design.individuals[x] {
                infected_in[a as usize] += 1;
            }
        }
    }
    Ok(Estimate { labels: tau })
}
