use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noisy_gt::harness::{self, ExperimentConfig, Mode};
use noisy_gt::Error;

#[derive(Parser)]
#[command(name = "noisy-gt", version, about = "Noisy group testing: rate thresholds and decoder simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rate constants over a θ grid
    Rates(Common),
    /// Monte Carlo trials of one decoder
    Simulate(Common),
    /// Simulation aggregates over θ × c_mult
    Sweep(Common),
    /// Concentration bands of random designs
    CheckDesign(Common),
    /// Exact posterior and BP cross-checks on small instances
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// noiseless | bsc:P | z:P11 | p00,p01,p10,p11
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "c-mult")]
    c_mult: Option<f64>,
    /// sparc | spex | dd
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    d: Option<f64>,
    /// cc | sc
    #[arg(long)]
    design: Option<String>,
    /// dd | sparc | spex | bp | map
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// comma separated
    #[arg(long = "theta-grid")]
    theta_grid: Option<String>,
    /// comma separated
    #[arg(long = "c-mult-grid")]
    c_mult_grid: Option<String>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long = "tolerance-mult")]
    tolerance_mult: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<usize>,
    #[arg(long = "eps-prime")]
    eps_prime: Option<f64>,
    /// relative margin above c_ex required by spex
    #[arg(long)]
    margin: Option<f64>,
    /// skip the DD constant in `rates`
    #[arg(long = "no-dd")]
    no_dd: bool,
    /// drop timing columns from simulation output
    #[arg(long = "no-timing")]
    no_timing: bool,
}

impl Common {
    fn config(&self, mode: Mode) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_kv_file(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        let pairs: [(&str, Option<String>); 20] = [
            ("channel", self.channel.clone()),
            ("n", self.n.map(|v| v.to_string())),
            ("theta", self.theta.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("c_mult", self.c_mult.map(|v| v.to_string())),
            ("target", self.target.clone()),
            ("d", self.d.map(|v| v.to_string())),
            ("design", self.design.clone()),
            ("decoder", self.decoder.clone()),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("jobs", self.jobs.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("theta_grid", self.theta_grid.clone()),
            ("c_mult_grid", self.c_mult_grid.clone()),
            ("zeta", self.zeta.map(|v| v.to_string())),
            ("tolerance_mult", self.tolerance_mult.map(|v| v.to_string())),
            ("t_max", self.t_max.map(|v| v.to_string())),
            ("eps_prime", self.eps_prime.map(|v| v.to_string())),
            ("margin", self.margin.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.no_dd {
            cfg.with_dd = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sink(cfg: &ExperimentConfig) -> Result<Box<dyn Write>, Error> {
    Ok(match &cfg.out {
        Some(p) => Box::new(File::create(p).map_err(|e| Error::io(p, e))?),
        None => Box::new(io::stdout().lock()),
    })
}

/// Exit status for a check: 0 when it passed, 3 otherwise.
fn run(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Cmd::Rates(c) => {
            let cfg = c.config(Mode::Rates)?;
            harness::write_rows(&harness::run_rates(&cfg)?, sink(&cfg)?)?;
        }
        Cmd::Simulate(c) => {
            let cfg = c.config(Mode::Simulate)?;
            let rep = harness::run_simulation(&cfg)?;
            rep.write_csv(sink(&cfg)?, !c.no_timing)?;
        }
        Cmd::Sweep(c) => {
            let cfg = c.config(Mode::Sweep)?;
            harness::write_rows(&harness::run_sweep(&cfg)?, sink(&cfg)?)?;
        }
        Cmd::CheckDesign(c) => {
            let cfg = c.config(Mode::CheckDesign)?;
            let rep = harness::run_design_check(&cfg)?;
            harness::write_rows(std::slice::from_ref(&rep), sink(&cfg)?)?;
            return Ok(if rep.pass { 0 } else { 3 });
        }
        Cmd::OracleCheck(c) => {
            let mut cfg = c.config(Mode::Oracle)?;
            if c.trials.is_none() {
                cfg.trials = 100;
            }
            let rep = harness::run_oracle_check(&cfg)?;
            harness::write_rows(std::slice::from_ref(&rep), sink(&cfg)?)?;
            return Ok(if rep.pass { 0 } else { 3 });
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
