//! Definite-defectives style two-pass thresholding.

use super::{Estimate, Label};
use crate::design::TestDesign;

/// DD on the whole design.
pub fn dd_decode(design: &TestDesign, displayed: &[bool], alpha: f64, beta: f64, delta: usize) -> Estimate {
    let all: Vec<u32> = (0..design.n as u32).collect();
    let labels = dd_decode_restricted(design, displayed, alpha, beta, delta, &all, |_| true);
    let mut out = vec![Label::Zero; design.n];
    for (&x, l) in all.iter().zip(labels) {
        out[x as usize] = l;
    }
    Estimate { labels: out }
}

/// DD on the individuals `members` using only tests accepted by `use_test`.
/// Returns one label per entry of `members`, never `Undetermined`.
pub fn dd_decode_restricted<F: Fn(usize) -> bool>(
    design: &TestDesign,
    displayed: &[bool],
    alpha: f64,
    beta: f64,
    delta: usize,
    members: &[u32],
    use_test: F,
) -> Vec<Label> {
    let rule_out = alpha * delta as f64;
    let rule_in = beta * delta as f64;
    // pass 1: enough negative tests rules an individual out
    let mut cleared = vec![false; design.n];
    for &x in members {
        let neg = design.individuals[x as usize]
            .iter()
            .filter(|&&a| use_test(a as usize) && !displayed[a as usize])
            .count();
        cleared[x as usize] = neg as f64 >= rule_out;
    }
    // pass 2: positive tests whose other members are all cleared
    let mut labels = Vec::with_capacity(members.len());
    for &x in members {
        if cleared[x as usize] {
            labels.push(Label::Zero);
            continue;
        }
        let solo = design.individuals[x as usize]
            .iter()
            .filter(|&&a| {
                let a = a as usize;
                use_test(a) && displayed[a] && design.tests[a].iter().all(|&y| y == x || cleared[y as usize])
            })
            .count();
        labels.push(if solo as f64 >= rule_in { Label::One } else { Label::Zero });
    }
    labels
}
