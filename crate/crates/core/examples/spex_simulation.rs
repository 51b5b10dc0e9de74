//! SPARC followed by SPEX rounds on one coupled instance, printing the
//! error after every stage.

use noisy_gt::decode::{hamming_error, spex_decode, SparcConfig};
use noisy_gt::design::{build_sc, derive_sc_params, sample_ground_truth, Instance};
use noisy_gt::rates::{build_threshold, c_dd, c_exact};
use noisy_gt::rng::{stream, Role};
use noisy_gt::NoiseChannel;

fn main() -> noisy_gt::Result<()> {
    let (n, theta) = (10_000, 0.5);
    let ch = NoiseChannel::bsc(0.01)?;
    let ex = c_exact(theta, &ch);
    let dd = c_dd(theta, &ch)?;
    let p = derive_sc_params(n, theta, 1.5 * ex.c_ex, ex.d_opt, &dd, None)?;
    let spec = build_threshold(p.c_eff, p.d_eff, theta, &ch, 1e-3)?;

    let design = build_sc(&p, &mut stream(7, 0, Role::Design))?;
    let sigma = sample_ground_truth(n, p.k, &mut stream(7, 0, Role::Truth));
    let inst = Instance::generate(&design, sigma, &ch, &mut stream(7, 0, Role::Noise));
    let cfg = SparcConfig::new(&ch, &design, p.d_eff, &dd)?;
    let out = spex_decode(&design, &inst.displayed, &ch, &cfg, &spec)?;

    println!("n = {n}, k = {}, m = {}", p.k, design.m_total());
    for (r, tau) in out.history.iter().enumerate() {
        let stage = if r == 0 { "sparc".to_string() } else { format!("round {r}") };
        println!("{stage:>8}: {} errors", hamming_error(tau, &inst.sigma)?);
    }
    Ok(())
}
