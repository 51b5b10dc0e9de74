//! Capacity-achieving density and `c_Sh` for a few channels.

use noisy_gt::channel::{d_shannon, mutual_info_rate, shannon_constant};
use noisy_gt::NoiseChannel;

fn main() -> noisy_gt::Result<()> {
    let channels = [
        NoiseChannel::noiseless(),
        NoiseChannel::bsc(0.01)?,
        NoiseChannel::bsc(0.1)?,
        NoiseChannel::z(0.9)?,
        NoiseChannel::z(0.5)?,
        NoiseChannel::new(0.95, 0.05, 0.2, 0.8)?,
    ];
    for ch in &channels {
        let d = d_shannon(ch)?;
        println!(
            "{ch}: d_sh = {d:.5}  e^-d = {:.4}  I(d_sh) = {:.5}  c_sh = {:.5}",
            (-d).exp(),
            mutual_info_rate(ch, d),
            shannon_constant(ch)
        );
    }
    Ok(())
}
