//! DD on constant-column designs around the DD threshold.

use noisy_gt::harness::{run_simulation, DecoderKind, ExperimentConfig, Target};
use noisy_gt::design::DesignKind;

fn main() -> noisy_gt::Result<()> {
    for c_mult in [0.8, 1.0, 1.2, 1.5] {
        let cfg = ExperimentConfig {
            channel: "z:0.9".parse()?,
            design: DesignKind::ConstantColumn,
            decoder: DecoderKind::Dd,
            target: Target::Dd,
            c_mult,
            trials: 10,
            ..Default::default()
        };
        let rep = run_simulation(&cfg)?;
        println!(
            "c_mult {c_mult:>4}: c_dd = {:.4}, m = {}, mean error {:.2}, exact {:.0}%",
            rep.plan.dd.c_dd,
            rep.plan.tests(),
            rep.aggregate.mean_error,
            100.0 * rep.aggregate.exact_fraction
        );
    }
    Ok(())
}
