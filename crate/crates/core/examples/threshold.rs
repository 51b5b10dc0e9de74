//! Piecewise-constant SPEX threshold for a given `(c, d, θ)`.

use noisy_gt::rates::{build_threshold, c_exact};
use noisy_gt::NoiseChannel;

fn main() -> noisy_gt::Result<()> {
    let ch = NoiseChannel::bsc(0.05)?;
    let theta = 0.5;
    let ex = c_exact(theta, &ch);
    let c = 1.3 * ex.c_ex;
    let spec = build_threshold(c, ex.d_opt, theta, &ch, 1e-3)?;
    println!("c = {c:.4}, d = {:.4}, I = ({}, {})", ex.d_opt, spec.l, spec.r);
    println!("δ = {:.3e}, {} cells", spec.delta, spec.values.len());
    let step = (spec.values.len() / 12).max(1);
    for i in (0..spec.values.len()).step_by(step) {
        let v = spec.values[i];
        println!(
            "  y in [{:.4}, {:.4})  Z/Y > {:.4}",
            *spec.breakpoints[i].numer() as f64 / *spec.breakpoints[i].denom() as f64,
            *spec.breakpoints[i + 1].numer() as f64 / *spec.breakpoints[i + 1].denom() as f64,
            *v.numer() as f64 / *v.denom() as f64
        );
    }
    spec.verify(&ch, 20_000)?;
    println!("verified");
    Ok(())
}
