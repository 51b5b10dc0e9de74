//! Builds a spatially coupled design with an instance and writes both dumps.
//!
//! `cargo run --release --example build_design -- 2000 0.4 out_dir`

use std::path::PathBuf;

use noisy_gt::design::{build_sc, derive_sc_params, sample_ground_truth, Instance};
use noisy_gt::rates::{c_dd, c_exact};
use noisy_gt::rng::{stream, Role};
use noisy_gt::NoiseChannel;

fn main() -> noisy_gt::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |s| s.parse().expect("n"));
    let theta: f64 = args.next().map_or(0.4, |s| s.parse().expect("theta"));
    let dir = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().display().to_string()));

    let ch = NoiseChannel::bsc(0.02)?;
    let ex = c_exact(theta, &ch);
    let dd = c_dd(theta, &ch)?;
    let p = derive_sc_params(n, theta, 1.5 * ex.c_ex, ex.d_opt, &dd, None)?;
    println!("{p:#?}");

    let design = build_sc(&p, &mut stream(1, 0, Role::Design))?;
    let sigma = sample_ground_truth(n, p.k, &mut stream(1, 0, Role::Truth));
    let inst = Instance::generate(&design, sigma, &ch, &mut stream(1, 0, Role::Noise));
    let flips = inst.actual.iter().zip(&inst.displayed).filter(|(a, b)| a != b).count();
    println!("{} tests, {} positive, {flips} flipped", design.m_total(), inst.displayed.iter().filter(|&&b| b).count());

    let (dp, ip) = (dir.join("design.txt"), dir.join("instance.txt"));
    std::fs::write(&dp, design.dump()).map_err(|e| noisy_gt::Error::io(&dp, e))?;
    std::fs::write(&ip, inst.dump()).map_err(|e| noisy_gt::Error::io(&ip, e))?;
    println!("wrote {} and {}", dp.display(), ip.display());
    Ok(())
}
