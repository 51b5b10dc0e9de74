//! Clean-up rounds on top of SPARC: re-diagnose every non-seed individual
//! from its untainted tests using the rational threshold function.

use super::{sparc_decode, Estimate, SparcConfig};
use crate::channel::NoiseChannel;
use crate::design::TestDesign;
use crate::error::{Error, Result};
use crate::rates::ThresholdSpec;

/// `(Y, Z)`: tests of `x` outside `F[0]` whose other members are all
/// labelled 0, and those among them displayed positive.
pub fn untainted_counts(design: &TestDesign, displayed: &[bool], tau: &[bool], x: usize) -> (u32, u32) {
    let mut y = 0;
    let mut z = 0;
    for &a in &design.individuals[x] {
        let a = a as usize;
        if is_seed_test(design, a) {
            continue;
        }
        if design.tests[a].iter().all(|&v| v as usize == x || !tau[v as usize]) {
            y += 1;
            z += displayed[a] as u32;
        }
    }
    (y, z)
}

fn is_seed_test(design: &TestDesign, a: usize) -> bool {
    design.sc.as_ref().is_some_and(|sc| sc.test_comp[a] == 0)
}

#[derive(Debug, Clone)]
pub struct SpexOutput {
    pub estimate: Estimate,
    /// Update rounds actually run (fewer than `⌈ln n⌉` at a fixed point).
    pub rounds_used: usize,
    /// `τ⁽¹⁾` (the SPARC output) followed by the label vector after each round.
    pub history: Vec<Vec<bool>>,
}

/// One synchronous update from `tau`; seed labels are kept.
pub fn spex_round(design: &TestDesign, displayed: &[bool], spec: &ThresholdSpec, tau: &[bool]) -> Vec<bool> {
    let mut ones = vec![0u32; design.m_total()];
    for (a, members) in design.tests.iter().enumerate() {
        ones[a] = members.iter().filter(|&&v| tau[v as usize]).count() as u32;
    }
    let sc = design.sc.as_ref();
    let delta = design.delta as u32;
    (0..design.n)
        .map(|x| {
            if sc.is_some_and(|sc| sc.is_seed(x)) {
                return tau[x];
            }
            let own = tau[x] as u32;
            let mut y = 0;
            let mut z = 0;
            for &a in &design.individuals[x] {
                let a = a as usize;
                if is_seed_test(design, a) || ones[a] - own != 0 {
                    continue;
                }
                y += 1;
                z += displayed[a] as u32;
            }
            spec.accepts(y, z, delta)
        })
        .collect()
}

/// Run from an explicit starting point `tau1`.
pub fn spex_from(design: &TestDesign, displayed: &[bool], spec: &ThresholdSpec, tau1: Vec<bool>) -> SpexOutput {
    let rounds = (design.n as f64).ln().ceil().max(1.0) as usize;
    let mut history = vec![tau1];
    let mut used = 0;
    for _ in 0..rounds {
        let cur = history.last().unwrap();
        let next = spex_round(design, displayed, spec, cur);
        used += 1;
        let fixed = next == *cur;
        history.push(next);
        if fixed {
            break;
        }
    }
    let estimate = Estimate::from_bits(history.last().unwrap());
    SpexOutput { estimate, rounds_used: used, history }
}

pub fn spex_decode(
    design: &TestDesign,
    displayed: &[bool],
    ch: &NoiseChannel,
    cfg: &SparcConfig,
    spec: &ThresholdSpec,
) -> Result<SpexOutput> {
    if design.sc.is_none() {
        return Err(Error::Domain("SPEX needs a coupled design".into()));
    }
    let tau1 = sparc_decode(design, displayed, ch, cfg)?.to_bits()?;
    Ok(spex_from(design, displayed, spec, tau1))
}
