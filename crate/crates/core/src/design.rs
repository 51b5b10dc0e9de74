//! Pooling designs: the constant-column design and the spatially coupled
//! ring design with a seed block, plus ground truths and test outcomes.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::channel::NoiseChannel;
use crate::error::{Error, Result};
use crate::rates::DdRate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DesignKind {
    ConstantColumn,
    SpatiallyCoupled,
}

impl DesignKind {
    pub fn tag(self) -> &'static str {
        match self {
            DesignKind::ConstantColumn => "cc",
            DesignKind::SpatiallyCoupled => "sc",
        }
    }
}

impl FromStr for DesignKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cc" => Ok(DesignKind::ConstantColumn),
            "sc" => Ok(DesignKind::SpatiallyCoupled),
            _ => Err(Error::Parse(format!("unknown design kind '{s}' (expected cc or sc)"))),
        }
    }
}

/// Compartment bookkeeping of a coupled design. Compartments are 1-based;
/// test compartment 0 is the seed block `F[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScMeta {
    pub ell: usize,
    pub s: usize,
    pub delta: usize,
    pub delta0: usize,
    pub m: usize,
    pub m0: usize,
    pub ind_comp: Vec<u32>,
    pub test_comp: Vec<u32>,
}

impl ScMeta {
    pub fn is_seed(&self, x: usize) -> bool {
        (self.ind_comp[x] as usize) <= self.s
    }

    /// Range of individual ids in compartment `i` (1-based).
    pub fn individuals(&self, i: usize) -> std::ops::Range<usize> {
        let n = self.ind_comp.len();
        comp_start(i - 1, n, self.ell)..comp_start(i, n, self.ell)
    }

    /// Range of test ids in compartment `i`; `0` is the seed block.
    pub fn tests(&self, i: usize) -> std::ops::Range<usize> {
        if i == 0 {
            return 0..self.m0;
        }
        let per = self.m / self.ell;
        let lo = self.m0 + (i - 1) * per;
        lo..lo + per
    }

    /// `i + j - 1` reduced onto the ring `1..=ell`.
    pub fn ring(&self, i: usize) -> usize {
        (i - 1) % self.ell + 1
    }
}

/// First individual of compartment `c` (0-based), so that `x` lies in
/// compartment `⌊x ℓ / n⌋`.
fn comp_start(c: usize, n: usize, ell: usize) -> usize {
    (c * n).div_ceil(ell)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestDesign {
    pub n: usize,
    pub kind: DesignKind,
    /// Sorted members of every test.
    pub tests: Vec<Vec<u32>>,
    /// Sorted tests of every individual.
    pub individuals: Vec<Vec<u32>>,
    /// Column degree (non-seed degree for coupled designs).
    pub delta: usize,
    pub sc: Option<ScMeta>,
}

impl TestDesign {
    pub fn m_total(&self) -> usize {
        self.tests.len()
    }

    fn from_tests(n: usize, kind: DesignKind, tests: Vec<Vec<u32>>, delta: usize, sc: Option<ScMeta>) -> Self {
        let mut individuals = vec![Vec::new(); n];
        for (a, members) in tests.iter().enumerate() {
            for &x in members {
                individuals[x as usize].push(a as u32);
            }
        }
        Self { n, kind, tests, individuals, delta, sc }
    }

    /// Design built from explicit member lists (tests are sorted and
    /// deduplicated).
    pub fn from_member_lists(n: usize, mut tests: Vec<Vec<u32>>) -> Result<Self> {
        for t in &mut tests {
            t.sort_unstable();
            t.dedup();
            if t.iter().any(|&x| x as usize >= n) {
                return Err(Error::Domain(format!("member out of range for n = {n}")));
            }
        }
        let delta = {
            let mut deg = vec![0usize; n];
            tests.iter().flatten().for_each(|&x| deg[x as usize] += 1);
            deg.into_iter().max().unwrap_or(0)
        };
        Ok(Self::from_tests(n, DesignKind::ConstantColumn, tests, delta, None))
    }

    /// Text dump: header `n m_total kind`, a `#params` line, then
    /// `test_id compartment members...` per test.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.n, self.m_total(), self.kind.tag()).unwrap();
        match &self.sc {
            Some(sc) => writeln!(
                out,
                "#params delta={} ell={} s={} delta0={} m={} m0={}",
                sc.delta, sc.ell, sc.s, sc.delta0, sc.m, sc.m0
            )
            .unwrap(),
            None => writeln!(out, "#params delta={}", self.delta).unwrap(),
        }
        for (a, members) in self.tests.iter().enumerate() {
            let comp = self.sc.as_ref().map_or(0, |sc| sc.test_comp[a]);
            write!(out, "{a} {comp}").unwrap();
            for x in members {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("design dump: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(bad("header must be 'n m_total kind'"));
        }
        let n: usize = h[0].parse().map_err(|_| bad("bad n"))?;
        let m_total: usize = h[1].parse().map_err(|_| bad("bad m_total"))?;
        let kind: DesignKind = h[2].parse()?;
        let mut params = std::collections::HashMap::new();
        let mut tests = Vec::with_capacity(m_total);
        let mut test_comp = Vec::with_capacity(m_total);
        for line in lines {
            if let Some(rest) = line.strip_prefix("#params") {
                for kv in rest.split_whitespace() {
                    let (k, v) = kv.split_once('=').ok_or_else(|| bad("bad #params entry"))?;
                    params.insert(k.to_string(), v.parse::<usize>().map_err(|_| bad("bad #params value"))?);
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace().map(|t| t.parse::<u32>());
            let id = it.next().ok_or_else(|| bad("missing test id"))?.map_err(|_| bad("bad test id"))?;
            if id as usize != tests.len() {
                return Err(bad("test ids must be consecutive from 0"));
            }
            let comp = it.next().ok_or_else(|| bad("missing compartment"))?.map_err(|_| bad("bad compartment"))?;
            let members: std::result::Result<Vec<u32>, _> = it.collect();
            let members = members.map_err(|_| bad("bad member id"))?;
            if members.iter().any(|&x| x as usize >= n) {
                return Err(bad("member id out of range"));
            }
            tests.push(members);
            test_comp.push(comp);
        }
        if tests.len() != m_total {
            return Err(bad("test count does not match header"));
        }
        let get = |k: &str| params.get(k).copied().ok_or_else(|| bad(&format!("missing #params {k}")));
        let delta = get("delta")?;
        let sc = match kind {
            DesignKind::ConstantColumn => None,
            DesignKind::SpatiallyCoupled => {
                let ell = get("ell")?;
                Some(ScMeta {
                    ell,
                    s: get("s")?,
                    delta,
                    delta0: get("delta0")?,
                    m: get("m")?,
                    m0: get("m0")?,
                    ind_comp: (0..n).map(|x| (x * ell / n) as u32 + 1).collect(),
                    test_comp,
                })
            }
        };
        Ok(Self::from_tests(n, kind, tests, delta, sc))
    }
}

/// Parameters of the coupled design for a given `(n, θ, c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScParams {
    pub n: usize,
    pub theta: f64,
    pub c: f64,
    pub d: f64,
    pub k: usize,
    pub ell: usize,
    pub s: usize,
    pub delta: usize,
    pub m: usize,
    pub m0: usize,
    pub delta0: usize,
    /// `kΔ/m` after rounding.
    pub d_eff: f64,
    /// `m / (k log(n/k))` after rounding.
    pub c_eff: f64,
}

impl ScParams {
    pub fn m_total(&self) -> usize {
        self.m + self.m0
    }
}

/// `⌈n^θ⌉`, robust to `n^θ` landing a hair above an integer.
pub fn k_of(n: usize, theta: f64) -> usize {
    let x = (n as f64).powf(theta);
    let r = x.round();
    if (x - r).abs() < 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

pub fn derive_sc_params(n: usize, theta: f64, c: f64, d: f64, dd: &DdRate, k_override: Option<usize>) -> Result<ScParams> {
    if n < 100 {
        return Err(Error::Domain(format!("coupled design needs n >= 100 (got {n})")));
    }
    if !(theta > 0.0 && theta < 1.0) || c <= 0.0 || d <= 0.0 {
        return Err(Error::Domain("need 0 < θ < 1 and c, d > 0".into()));
    }
    let k = k_override.unwrap_or_else(|| k_of(n, theta));
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("need 0 < k < n (got k = {k})")));
    }
    let ln_n = (n as f64).ln();
    let ell = ln_n.sqrt().ceil() as usize;
    let s = ln_n.ln().ceil().max(1.0) as usize;
    let lnk = (n as f64 / k as f64).ln();
    let m = ell * ((c * k as f64 * lnk / ell as f64).round() as usize);
    let delta = s * ((d * m as f64 / (k * s) as f64).round() as usize).max(1);
    if delta / s < 1 || m / ell < delta || m == 0 {
        return Err(Error::DegenerateDesign(format!(
            "m/ℓ = {} tests per compartment cannot host Δ = {delta} (s = {s})",
            m / ell
        )));
    }
    let ks_ell = (k * s) as f64 / ell as f64;
    let m0 = (2.0 * dd.c_dd * ks_ell * lnk).ceil() as usize;
    let delta0 = ((dd.d * m0 as f64 / ks_ell).round() as usize).clamp(1, m0);
    Ok(ScParams {
        n,
        theta,
        c,
        d,
        k,
        ell,
        s,
        delta,
        m,
        m0,
        delta0,
        d_eff: (k * delta) as f64 / m as f64,
        c_eff: m as f64 / (k as f64 * lnk),
    })
}

/// Draw `count` distinct entries of `pool` into `out` by a partial shuffle.
/// The pool stays a permutation, so it can be reused for the next draw.
fn draw<R: Rng + ?Sized>(pool: &mut [u32], count: usize, rng: &mut R, out: &mut Vec<u32>) {
    let len = pool.len();
    for i in 0..count {
        let j = rng.gen_range(i..len);
        pool.swap(i, j);
        out.push(pool[i]);
    }
}

/// Uniform weight-`k` ground truth.
pub fn sample_ground_truth<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<bool> {
    let k = k.min(n);
    let mut pool: Vec<u32> = (0..n as u32).collect();
    let mut chosen = Vec::with_capacity(k);
    draw(&mut pool, k, rng, &mut chosen);
    let mut sigma = vec![false; n];
    for x in chosen {
        sigma[x as usize] = true;
    }
    sigma
}

/// Constant-column design: every individual joins `delta` distinct tests.
pub fn build_cc<R: Rng + ?Sized>(n: usize, m: usize, delta: usize, rng: &mut R) -> Result<TestDesign> {
    if delta > m {
        return Err(Error::DegenerateDesign(format!("Δ = {delta} exceeds m = {m}")));
    }
    let mut pool: Vec<u32> = (0..m as u32).collect();
    let mut tests = vec![Vec::new(); m];
    let mut picked = Vec::with_capacity(delta);
    for x in 0..n {
        picked.clear();
        draw(&mut pool, delta, rng, &mut picked);
        for &a in &picked {
            tests[a as usize].push(x as u32);
        }
    }
    Ok(TestDesign::from_tests(n, DesignKind::ConstantColumn, tests, delta, None))
}

/// Spatially coupled ring design with seed block `F[0]`.
pub fn build_sc<R: Rng + ?Sized>(p: &ScParams, rng: &mut R) -> Result<TestDesign> {
    let (n, ell, s) = (p.n, p.ell, p.s);
    let per_comp = p.m / ell;
    let per_j = p.delta / s;
    if per_j > per_comp || p.delta0 > p.m0 {
        return Err(Error::DegenerateDesign("compartments too small for the degrees".into()));
    }
    let m_total = p.m0 + p.m;
    let mut tests = vec![Vec::new(); m_total];
    let mut test_comp = vec![0u32; m_total];
    for i in 1..=ell {
        let lo = p.m0 + (i - 1) * per_comp;
        test_comp[lo..lo + per_comp].iter_mut().for_each(|c| *c = i as u32);
    }
    let ind_comp: Vec<u32> = (0..n).map(|x| (x * ell / n) as u32 + 1).collect();
    let mut comp_pool: Vec<u32> = (0..per_comp as u32).collect();
    let mut seed_pool: Vec<u32> = (0..p.m0 as u32).collect();
    let mut picked = Vec::with_capacity(per_j.max(p.delta0));
    for x in 0..n {
        let i = ind_comp[x] as usize;
        for j in 1..=s {
            let f = (i + j - 2) % ell + 1;
            let base = p.m0 + (f - 1) * per_comp;
            picked.clear();
            draw(&mut comp_pool, per_j, rng, &mut picked);
            for &a in &picked {
                tests[base + a as usize].push(x as u32);
            }
        }
        if i <= s {
            picked.clear();
            draw(&mut seed_pool, p.delta0, rng, &mut picked);
            for &a in &picked {
                tests[a as usize].push(x as u32);
            }
        }
    }
    let meta = ScMeta {
        ell,
        s,
        delta: p.delta,
        delta0: p.delta0,
        m: p.m,
        m0: p.m0,
        ind_comp,
        test_comp,
    };
    let mut design = TestDesign::from_tests(n, DesignKind::SpatiallyCoupled, tests, p.delta, Some(meta));
    for t in &mut design.individuals {
        t.sort_unstable();
    }
    Ok(design)
}

/// Noiseless outcome of every test.
pub fn actual_outcomes(design: &TestDesign, sigma: &[bool]) -> Vec<bool> {
    design
        .tests
        .iter()
        .map(|members| members.iter().any(|&x| sigma[x as usize]))
        .collect()
}

/// Send every actual outcome independently through the channel.
pub fn displayed_outcomes<R: Rng + ?Sized>(actual: &[bool], ch: &NoiseChannel, rng: &mut R) -> Vec<bool> {
    actual.iter().map(|&a| ch.transmit(a, rng.gen::<f64>())).collect()
}

/// Ground truth with its actual and displayed test results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub sigma: Vec<bool>,
    pub actual: Vec<bool>,
    pub displayed: Vec<bool>,
}

impl Instance {
    pub fn generate<R: Rng + ?Sized>(design: &TestDesign, sigma: Vec<bool>, ch: &NoiseChannel, rng: &mut R) -> Self {
        let actual = actual_outcomes(design, &sigma);
        let displayed = displayed_outcomes(&actual, ch, rng);
        Self { sigma, actual, displayed }
    }

    /// Three lines `name length hex`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (name, bits) in [("sigma", &self.sigma), ("actual", &self.actual), ("displayed", &self.displayed)] {
            writeln!(out, "{name} {} {}", bits.len(), to_hex(bits)).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: [Option<Vec<bool>>; 3] = [None, None, None];
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() < 2 {
                return Err(Error::Parse(format!("instance line '{line}'")));
            }
            let len: usize = parts[1].parse().map_err(|_| Error::Parse(format!("instance length in '{line}'")))?;
            let bits = from_hex(parts.get(2).copied().unwrap_or(""), len)?;
            let slot = match parts[0] {
                "sigma" => 0,
                "actual" => 1,
                "displayed" => 2,
                other => return Err(Error::Parse(format!("unknown instance field '{other}'"))),
            };
            fields[slot] = Some(bits);
        }
        let [s, a, d] = fields;
        let missing = || Error::Parse("instance dump needs sigma, actual and displayed".into());
        Ok(Self { sigma: s.ok_or_else(missing)?, actual: a.ok_or_else(missing)?, displayed: d.ok_or_else(missing)? })
    }
}

/// Bits packed four per hex digit, most significant first.
pub fn to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|c| {
            let v = c.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << (3 - i)));
            char::from_digit(v, 16).unwrap()
        })
        .collect()
}

pub fn from_hex(s: &str, len: usize) -> Result<Vec<bool>> {
    if s.len() != len.div_ceil(4) {
        return Err(Error::Parse(format!("hex string of {} digits for {len} bits", s.len())));
    }
    let mut bits = Vec::with_capacity(len);
    for ch in s.chars() {
        let v = ch.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit '{ch}'")))?;
        for i in 0..4 {
            if bits.len() < len {
                bits.push(v >> (3 - i) & 1 == 1);
            }
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dd_stub() -> DdRate {
        DdRate { c_dd: 2.0, alpha: 0.3, beta: 0.2, d: std::f64::consts::LN_2 }
    }

    #[test]
    fn params_at_desk_scale() {
        let p = derive_sc_params(10_000, 0.5, 2.0, std::f64::consts::LN_2, &dd_stub(), None).unwrap();
        assert_eq!((p.k, p.ell, p.s), (100, 4, 3));
        assert_eq!(p.m % p.ell, 0);
        assert_eq!(p.delta % p.s, 0);
        assert!((p.d_eff - (p.k * p.delta) as f64 / p.m as f64).abs() < 1e-15);
        let p = derive_sc_params(1_000_000, 0.5, 2.0, std::f64::consts::LN_2, &dd_stub(), None).unwrap();
        assert_eq!((p.k, p.ell, p.s), (1000, 4, 3));
        assert!(derive_sc_params(50, 0.5, 2.0, 0.7, &dd_stub(), None).is_err());
        // a handful of tests cannot host any degree
        assert!(derive_sc_params(10_000, 0.5, 0.002, 0.7, &dd_stub(), None).is_err());
    }

    #[test]
    fn k_rounding() {
        assert_eq!(k_of(10_000, 0.5), 100);
        assert_eq!(k_of(100_000, 0.5), 317);
        assert_eq!(k_of(1000, 1.0 / 3.0), 10);
    }

    #[test]
    fn ground_truth_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ground_truth(10, 0, &mut rng).iter().all(|&b| !b));
        assert!(sample_ground_truth(10, 10, &mut rng).iter().all(|&b| b));
        for _ in 0..20 {
            assert_eq!(sample_ground_truth(1000, 37, &mut rng).iter().filter(|&&b| b).count(), 37);
        }
    }

    #[test]
    fn cc_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = build_cc(1000, 100, 10, &mut rng).unwrap();
        assert!(g.individuals.iter().all(|t| t.len() == 10));
        let mut seen = std::collections::HashSet::new();
        for t in &g.individuals {
            seen.clear();
            assert!(t.iter().all(|a| seen.insert(*a)));
        }
        let mean = g.tests.iter().map(|t| t.len()).sum::<usize>() as f64 / 100.0;
        assert!((mean - 100.0).abs() < 1e-9);
        let full = build_cc(5, 3, 3, &mut rng).unwrap();
        assert!(full.tests.iter().all(|t| t.len() == 5));
        assert!(build_cc(5, 3, 4, &mut rng).is_err());
    }

    #[test]
    fn sc_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = derive_sc_params(10_000, 0.5, 2.0, std::f64::consts::LN_2, &dd_stub(), None).unwrap();
        let g = build_sc(&p, &mut rng).unwrap();
        let sc = g.sc.as_ref().unwrap();
        assert_eq!(g.m_total(), p.m + p.m0);
        for i in 1..=sc.ell {
            let size = sc.individuals(i).len();
            assert!(size == 10_000 / 4);
            assert_eq!(sc.tests(i).len(), p.m / p.ell);
        }
        for x in 0..g.n {
            let i = sc.ind_comp[x] as usize;
            let mut per = vec![0usize; sc.ell + 1];
            for &a in &g.individuals[x] {
                per[sc.test_comp[a as usize] as usize] += 1;
            }
            for j in 1..=sc.s {
                assert_eq!(per[sc.ring(i + j - 1)], p.delta / p.s);
            }
            assert_eq!(per[0], if i <= sc.s { p.delta0 } else { 0 });
        }
        for (a, members) in g.tests.iter().enumerate() {
            let f = sc.test_comp[a] as usize;
            if f == 0 {
                assert!(members.iter().all(|&x| sc.is_seed(x as usize)));
                continue;
            }
            for &x in members {
                let i = sc.ind_comp[x as usize] as usize;
                // i ∈ {f-s+1, …, f} on the ring
                let back = (f + sc.ell - i) % sc.ell;
                assert!(back < sc.s);
            }
            assert!(members.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = build_cc(12, 6, 2, &mut rng).unwrap();
        assert!(actual_outcomes(&g, &[false; 12]).iter().all(|&b| !b));
        let all = actual_outcomes(&g, &[true; 12]);
        for (a, t) in g.tests.iter().enumerate() {
            assert_eq!(all[a], !t.is_empty());
        }
        let sigma = sample_ground_truth(12, 3, &mut rng);
        let act = actual_outcomes(&g, &sigma);
        for (a, t) in g.tests.iter().enumerate() {
            let hit = (0..12).any(|x| sigma[x] && t.contains(&(x as u32)));
            assert_eq!(act[a], hit);
        }
        let nl = NoiseChannel::noiseless();
        assert_eq!(displayed_outcomes(&act, &nl, &mut rng), act);
        let z = NoiseChannel::z(0.5).unwrap();
        let shown = displayed_outcomes(&all, &z, &mut rng);
        assert!(shown.iter().zip(&all).all(|(s, a)| !s | a));
    }

    #[test]
    fn bsc_flip_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = NoiseChannel::bsc(0.1).unwrap();
        let actual: Vec<bool> = (0..100_000).map(|i| i % 3 == 0).collect();
        let shown = displayed_outcomes(&actual, &ch, &mut rng);
        let flips = actual.iter().zip(&shown).filter(|(a, b)| a != b).count() as f64 / 1e5;
        assert!((flips - 0.1).abs() < 0.004);
    }

    #[test]
    fn dump_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = derive_sc_params(500, 0.4, 3.0, 0.7, &dd_stub(), None).unwrap();
        let g = build_sc(&p, &mut rng).unwrap();
        assert_eq!(TestDesign::parse(&g.dump()).unwrap(), g);
        let g = build_cc(40, 9, 3, &mut rng).unwrap();
        assert_eq!(TestDesign::parse(&g.dump()).unwrap(), g);
        assert!(TestDesign::parse("3 1 cc\n#params delta=1\n0 0 7\n").is_err());
        let sigma = sample_ground_truth(40, 4, &mut rng);
        let inst = Instance::generate(&g, sigma, &NoiseChannel::bsc(0.2).unwrap(), &mut rng);
        assert_eq!(Instance::parse(&inst.dump()).unwrap(), inst);
    }

    #[test]
    fn hex_codec() {
        let bits = [true, false, true, true, false, true];
        assert_eq!(to_hex(&bits), "b4");
        assert_eq!(from_hex("b4", 6).unwrap(), bits);
        assert!(from_hex("b4", 9).is_err());
        assert!(from_hex("zz", 8).is_err());
    }
}
