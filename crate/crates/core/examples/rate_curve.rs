//! Information rates `θ/c` of the exact, DD and Shannon constants over θ.
//!
//! `cargo run --release --example rate_curve -- bsc:0.1`

use noisy_gt::channel::shannon_constant;
use noisy_gt::rates::{c_dd, c_exact};
use noisy_gt::NoiseChannel;

fn main() -> noisy_gt::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "bsc:0.01".into());
    let ch: NoiseChannel = spec.parse()?;
    let c_sh = shannon_constant(&ch);
    println!("channel {ch}, c_sh = {c_sh:.5}");
    println!("{:>5} {:>9} {:>9} {:>9} {:>7}", "theta", "rate_ex", "rate_dd", "rate_sh", "d_opt");
    for i in 1..10 {
        let theta = i as f64 / 10.0;
        let ex = c_exact(theta, &ch);
        let dd = c_dd(theta, &ch)?;
        println!(
            "{theta:>5.2} {:>9.5} {:>9.5} {:>9.5} {:>7.4}",
            theta / ex.c_ex,
            theta / dd.c_dd,
            theta / c_sh,
            ex.d_opt
        );
    }
    Ok(())
}
