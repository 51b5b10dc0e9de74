//! Exhaustive posterior over small instances.

use super::bp::PriorMode;
use crate::channel::NoiseChannel;
use crate::design::TestDesign;
use crate::error::{Error, Result};

const GUARD: u128 = 10_000_000;

/// Normalized posterior table. Configurations are bitmasks with bit `x` set
/// when individual `x` is infected.
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    pub n: usize,
    pub mode: PriorMode,
    pub configs: Vec<u64>,
    /// Unnormalized weights `ψ(σ)` (times the prior factor in product mode).
    pub weights: Vec<f64>,
    pub probs: Vec<f64>,
    pub z: f64,
}

impl PosteriorTable {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn prob_of(&self, config: u64) -> Option<f64> {
        self.configs.iter().position(|&c| c == config).map(|i| self.probs[i])
    }

    pub fn marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (&c, &p) in self.configs.iter().zip(&self.probs) {
            for (x, slot) in m.iter_mut().enumerate() {
                if c >> x & 1 == 1 {
                    *slot += p;
                }
            }
        }
        m
    }

    /// Most likely configuration; the first in enumeration order wins ties.
    pub fn map(&self) -> (u64, f64) {
        let mut best = (self.configs[0], self.probs[0]);
        for (&c, &p) in self.configs.iter().zip(&self.probs).skip(1) {
            if p > best.1 {
                best = (c, p);
            }
        }
        best
    }

    /// FNV-1a over the configurations and the bit patterns of the probabilities.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: [u8; 8]| {
            for b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed((self.n as u64).to_le_bytes());
        for (&c, &p) in self.configs.iter().zip(&self.probs) {
            feed(c.to_le_bytes());
            feed(p.to_bits().to_le_bytes());
        }
        h
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// All `n`-bit masks of weight `k` in increasing order.
pub fn weight_k_masks(n: usize, k: usize) -> Vec<u64> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let limit = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut out = Vec::new();
    let mut v: u64 = (1u64 << k) - 1;
    loop {
        out.push(v);
        // Gosper's hack
        let c = v & v.wrapping_neg();
        let r = v.wrapping_add(c);
        if r == 0 || r > limit {
            break;
        }
        let next = (((r ^ v) >> 2) / c) | r;
        if next > limit {
            break;
        }
        v = next;
    }
    out
}

fn test_masks(design: &TestDesign) -> Vec<u64> {
    design
        .tests
        .iter()
        .map(|t| t.iter().fold(0u64, |m, &x| m | 1u64 << x))
        .collect()
}

/// `ψ(σ) = Π_a P[displayed_a | actual_a(σ)]`.
pub fn psi(masks: &[u64], displayed: &[bool], ch: &NoiseChannel, sigma: u64) -> f64 {
    masks
        .iter()
        .zip(displayed)
        .map(|(&m, &shown)| ch.prob(sigma & m != 0, shown))
        .product()
}

/// `ψ(σ)` for a single configuration.
pub fn psi_of(design: &TestDesign, displayed: &[bool], ch: &NoiseChannel, sigma: u64) -> f64 {
    psi(&test_masks(design), displayed, ch, sigma)
}

pub fn exhaustive_posterior(
    design: &TestDesign,
    displayed: &[bool],
    ch: &NoiseChannel,
    k: usize,
    mode: PriorMode,
) -> Result<PosteriorTable> {
    let n = design.n;
    if n > 63 {
        return Err(Error::Guard(u128::MAX));
    }
    if displayed.len() != design.m_total() {
        return Err(Error::Domain("displayed length differs from the number of tests".into()));
    }
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    let count = match mode {
        PriorMode::HardK => binomial(n, k),
        PriorMode::ProductBernoulli => 1u128 << n,
    };
    if count > GUARD {
        return Err(Error::Guard(count));
    }
    let masks = test_masks(design);
    let (configs, weights): (Vec<u64>, Vec<f64>) = match mode {
        PriorMode::HardK => weight_k_masks(n, k)
            .into_iter()
            .map(|s| (s, psi(&masks, displayed, ch, s)))
            .unzip(),
        PriorMode::ProductBernoulli => {
            let q = k as f64 / n as f64;
            (0..1u64 << n)
                .map(|s| {
                    let w = s.count_ones() as i32;
                    let prior = q.powi(w) * (1.0 - q).powi(n as i32 - w);
                    (s, prior * psi(&masks, displayed, ch, s))
                })
                .unzip()
        }
    };
    let z: f64 = weights.iter().sum();
    if !(z > 0.0) {
        return Err(Error::Infeasible("displayed outcomes have zero likelihood".into()));
    }
    let probs = weights.iter().map(|w| w / z).collect();
    Ok(PosteriorTable { n, mode, configs, weights, probs, z })
}
