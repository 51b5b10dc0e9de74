//! Belief propagation against the exhaustive posterior on a tiny loopy
//! design, where BP is only approximate.

use noisy_gt::decode::{bp_decode, exhaustive_posterior, PriorMode};
use noisy_gt::design::{build_cc, sample_ground_truth, Instance};
use noisy_gt::rng::{stream, Role};
use noisy_gt::NoiseChannel;

fn main() -> noisy_gt::Result<()> {
    let (n, k) = (14, 2);
    let ch = NoiseChannel::bsc(0.05)?;
    let design = build_cc(n, 8, 2, &mut stream(3, 0, Role::Design))?;
    let sigma = sample_ground_truth(n, k, &mut stream(3, 0, Role::Truth));
    let inst = Instance::generate(&design, sigma, &ch, &mut stream(3, 0, Role::Noise));

    let exact = exhaustive_posterior(&design, &inst.displayed, &ch, k, PriorMode::ProductBernoulli)?;
    let bp = bp_decode(&design, &inst.displayed, &ch, k, 50, PriorMode::ProductBernoulli)?;
    println!("{:>3} {:>5} {:>9} {:>9}", "x", "truth", "exact", "bp");
    for (x, (a, b)) in exact.marginals().iter().zip(bp.marginals()).enumerate() {
        println!("{x:>3} {:>5} {a:>9.5} {b:>9.5}", inst.sigma[x] as u8);
    }
    let (map, p) = exhaustive_posterior(&design, &inst.displayed, &ch, k, PriorMode::HardK)?.map();
    let members: Vec<usize> = (0..n).filter(|x| map >> x & 1 == 1).collect();
    println!("MAP with |σ| = {k}: {members:?} (p = {p:.4}), BP rounds {}", bp.rounds);
    Ok(())
}
