//! Belief propagation in log-likelihood-ratio form.

use super::Estimate;
use crate::channel::NoiseChannel;
use crate::design::TestDesign;
use crate::error::{Error, Result};

const CLAMP: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    /// Exactly `k` infected.
    HardK,
    /// Independent `Be(k/n)` prior on every individual.
    ProductBernoulli,
}

#[derive(Debug, Clone)]
pub struct BpOutput {
    /// Marginal log-likelihood ratios `η_x`.
    pub llr: Vec<f64>,
    pub estimate: Estimate,
    pub rounds: usize,
    /// Number of messages that hit the `±500` guard.
    pub clamped: usize,
}

impl BpOutput {
    /// `P[σ_x = 1]` under the BP approximation.
    pub fn marginals(&self) -> Vec<f64> {
        self.llr.iter().map(|&e| 1.0 / (1.0 + (-e).exp())).collect()
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn clamp(v: f64, count: &mut usize) -> f64 {
    if v.is_nan() {
        return 0.0;
    }
    if v > CLAMP {
        *count += 1;
        CLAMP
    } else if v < -CLAMP {
        *count += 1;
        -CLAMP
    } else {
        v
    }
}

/// Test-to-individual message given `log Π_{y≠x} P[y uninfected]`.
fn test_message(p1r: f64, p0r: f64, log_all_clear: f64) -> f64 {
    let clear = log_all_clear.exp();
    let denom = p1r + (p0r - p1r) * clear;
    if p1r <= 0.0 {
        return if denom <= 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    p1r.ln() - denom.ln()
}

pub fn bp_decode(
    design: &TestDesign,
    displayed: &[bool],
    ch: &NoiseChannel,
    k: usize,
    t_max: usize,
    prior: PriorMode,
) -> Result<BpOutput> {
    if prior != PriorMode::ProductBernoulli {
        return Err(Error::Domain("BP supports the product-Bernoulli prior only".into()));
    }
    let n = design.n;
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("BP needs 0 < k < n (got k = {k}, n = {n})")));
    }
    let prior_llr = (k as f64 / (n - k) as f64).ln();

    // edge e = offsets[a] + position of x in test a
    let mut offsets = Vec::with_capacity(design.m_total() + 1);
    offsets.push(0usize);
    for t in &design.tests {
        offsets.push(offsets.last().unwrap() + t.len());
    }
    let edges = *offsets.last().unwrap();
    let mut edges_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, t) in design.tests.iter().enumerate() {
        for (p, &x) in t.iter().enumerate() {
            edges_of[x as usize].push(offsets[a] + p);
        }
    }

    let mut to_test = vec![prior_llr; edges];
    let mut to_ind = vec![0.0; edges];
    let mut clamped = 0;
    let mut rounds = 0;
    let mut prefix = Vec::new();
    for _ in 0..t_max {
        rounds += 1;
        let mut change: f64 = 0.0;
        for (a, t) in design.tests.iter().enumerate() {
            let (p1r, p0r) = if displayed[a] { (ch.p11(), ch.p01()) } else { (ch.p10(), ch.p00()) };
            let base = offsets[a];
            let len = t.len();
            // prefix/suffix sums of log P[y uninfected] = -softplus(η_y)
            prefix.clear();
            prefix.push(0.0);
            for p in 0..len {
                let v = prefix[p] - softplus(to_test[base + p]);
                prefix.push(v);
            }
            let mut suffix = 0.0;
            for p in (0..len).rev() {
                let msg = clamp(test_message(p1r, p0r, prefix[p] + suffix), &mut clamped);
                change = change.max((msg - to_ind[base + p]).abs());
                to_ind[base + p] = msg;
                suffix -= softplus(to_test[base + p]);
            }
        }
        for es in &edges_of {
            let total: f64 = es.iter().map(|&e| to_ind[e]).sum();
            for &e in es {
                to_test[e] = clamp(prior_llr + total - to_ind[e], &mut clamped);
            }
        }
        if change < 1e-9 {
            break;
        }
    }
    let llr: Vec<f64> = edges_of
        .iter()
        .map(|es| prior_llr + es.iter().map(|&e| to_ind[e]).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| llr[y].total_cmp(&llr[x]).then(x.cmp(&y)));
    let mut bits = vec![false; n];
    for &x in order.iter().take(k) {
        bits[x] = true;
    }
    Ok(BpOutput { llr, estimate: Estimate::from_bits(&bits), rounds, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds_is_prior() {
        let g = TestDesign::from_member_lists(6, vec![vec![0, 1], vec![2, 3, 4]]).unwrap();
        let ch = NoiseChannel::bsc(0.1).unwrap();
        let out = bp_decode(&g, &[true, false], &ch, 2, 0, PriorMode::ProductBernoulli).unwrap();
        for p in out.marginals() {
            assert!((p - 2.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_singleton_positive_is_certain() {
        let g = TestDesign::from_member_lists(3, vec![vec![0], vec![1, 2]]).unwrap();
        let out = bp_decode(&g, &[true, false], &NoiseChannel::noiseless(), 1, 5, PriorMode::ProductBernoulli).unwrap();
        assert_eq!(out.llr[0], CLAMP + (1.0f64 / 2.0).ln());
        assert!(out.clamped > 0);
        assert!(out.llr[1] < -400.0 && out.llr[2] < -400.0);
        assert_eq!(out.estimate.to_bits().unwrap(), vec![true, false, false]);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn hard_prior_rejected() {
        let g = TestDesign::from_member_lists(3, vec![vec![0]]).unwrap();
        assert!(bp_decode(&g, &[true], &NoiseChannel::noiseless(), 1, 3, PriorMode::HardK).is_err());
    }
}
