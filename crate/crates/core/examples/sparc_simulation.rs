//! Monte Carlo trials of SPARC at a few budget multipliers.

use noisy_gt::harness::{run_simulation, DecoderKind, ExperimentConfig, Target};

fn main() -> noisy_gt::Result<()> {
    for c_mult in [0.5, 1.3, 2.0, 3.0] {
        let cfg = ExperimentConfig {
            decoder: DecoderKind::Sparc,
            target: Target::Sparc,
            c_mult,
            trials: 10,
            ..Default::default()
        };
        let rep = run_simulation(&cfg)?;
        let a = &rep.aggregate;
        println!(
            "c_mult {c_mult:>4}: m = {:>5}, mean error {:>6.2} ± {:.2}, exact {:.0}%",
            rep.plan.tests(),
            a.mean_error,
            a.err_ci_half,
            100.0 * a.exact_fraction
        );
    }
    Ok(())
}
