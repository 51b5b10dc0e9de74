//! Experiment driver: configuration, rate tables, Monte Carlo trials and the
//! design / oracle self-checks behind the command line tool.

use std::fmt;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{d_shannon, shannon_constant, NoiseChannel};
use crate::decode::{
    bp_decode, dd_decode, exhaustive_posterior, hamming_error, sparc_decode, spex_decode, PriorMode, SparcConfig,
};
use crate::design::{
    build_cc, build_sc, derive_sc_params, k_of, sample_ground_truth, DesignKind, Instance, ScParams, TestDesign,
};
use crate::error::{Error, Result};
use crate::rates::{build_threshold, c_dd, c_ex1, c_ex2, c_exact, rate_report, DdRate, ExactRate, RateOptions, ThresholdSpec};
use crate::rng::{stream, Role};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Rates,
    Simulate,
    Sweep,
    CheckDesign,
    Oracle,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rates" => Mode::Rates,
            "simulate" => Mode::Simulate,
            "sweep" => Mode::Sweep,
            "check-design" => Mode::CheckDesign,
            "oracle" | "oracle-check" => Mode::Oracle,
            _ => return Err(Error::Config(format!("unknown mode '{s}'"))),
        })
    }
}

/// Which test budget `c_mult` scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `c_Sh k log(n/k)` at `d_Sh`.
    Sparc,
    /// `c_ex k log(n/k)` at the optimal `d`.
    Spex,
    /// `c_DD k log(n/k)` at the DD-optimal `d`.
    Dd,
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sparc" => Target::Sparc,
            "spex" => Target::Spex,
            "dd" => Target::Dd,
            _ => return Err(Error::Config(format!("unknown target '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Dd,
    Sparc,
    Spex,
    Bp,
    Map,
}

impl DecoderKind {
    pub fn tag(self) -> &'static str {
        match self {
            DecoderKind::Dd => "dd",
            DecoderKind::Sparc => "sparc",
            DecoderKind::Spex => "spex",
            DecoderKind::Bp => "bp",
            DecoderKind::Map => "map",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dd" => DecoderKind::Dd,
            "sparc" => DecoderKind::Sparc,
            "spex" => DecoderKind::Spex,
            "bp" => DecoderKind::Bp,
            "map" => DecoderKind::Map,
            _ => return Err(Error::Config(format!("unknown decoder '{s}'"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub channel: NoiseChannel,
    pub n: usize,
    pub theta: f64,
    /// Overrides `k = ⌈n^θ⌉`.
    pub k: Option<usize>,
    pub c_mult: f64,
    pub target: Target,
    /// Overrides the target's test density `d`.
    pub d: Option<f64>,
    pub design: DesignKind,
    pub decoder: DecoderKind,
    pub trials: usize,
    pub master_seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub theta_grid: Vec<f64>,
    pub c_mult_grid: Vec<f64>,
    pub zeta: Option<f64>,
    pub tolerance_mult: f64,
    pub t_max: usize,
    pub eps_prime: f64,
    /// SPEX needs `c ≥ (1 + margin) c_ex(d, θ)` at the realized `(c, d)`.
    pub margin: f64,
    pub with_dd: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            channel: NoiseChannel::bsc(0.01).expect("valid channel"),
            n: 10_000,
            theta: 0.5,
            k: None,
            c_mult: 1.5,
            target: Target::Spex,
            d: None,
            design: DesignKind::SpatiallyCoupled,
            decoder: DecoderKind::Spex,
            trials: 20,
            master_seed: 1,
            jobs: 0,
            out: None,
            theta_grid: (1..20).map(|i| i as f64 * 0.05).collect(),
            c_mult_grid: vec![0.5, 1.0, 1.5, 2.0],
            zeta: None,
            tolerance_mult: 1.0,
            t_max: 20,
            eps_prime: 1e-3,
            margin: 0.1,
            with_dd: true,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

impl ExperimentConfig {
    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "mode" => self.mode = v.parse()?,
            "channel" => self.channel = v.parse()?,
            "n" => self.n = parse_num(key, v)?,
            "theta" => self.theta = parse_num(key, v)?,
            "k" => self.k = Some(parse_num(key, v)?),
            "c_mult" => self.c_mult = parse_num(key, v)?,
            "target" => self.target = v.parse()?,
            "d" => self.d = Some(parse_num(key, v)?),
            "design" => self.design = v.parse()?,
            "decoder" => self.decoder = v.parse()?,
            "trials" => self.trials = parse_num(key, v)?,
            "seed" | "master_seed" => self.master_seed = parse_num(key, v)?,
            "jobs" => self.jobs = parse_num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "theta_grid" => self.theta_grid = parse_list(key, v)?,
            "c_mult_grid" => self.c_mult_grid = parse_list(key, v)?,
            "zeta" => self.zeta = Some(parse_num(key, v)?),
            "tolerance_mult" => self.tolerance_mult = parse_num(key, v)?,
            "t_max" => self.t_max = parse_num(key, v)?,
            "eps_prime" => self.eps_prime = parse_num(key, v)?,
            "margin" => self.margin = parse_num(key, v)?,
            "with_dd" => self.with_dd = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a `key=value` file; `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv(&text)
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or_else(|| k_of(self.n, self.theta))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta must lie in (0,1), got {}", self.theta));
        }
        if self.theta_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return bad("theta grid values must lie in (0,1)".into());
        }
        if !(self.c_mult > 0.0) || self.c_mult_grid.iter().any(|&c| !(c > 0.0)) {
            return bad("c_mult must be positive".into());
        }
        if matches!(self.mode, Mode::Rates | Mode::Oracle) {
            return Ok(());
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        let k = self.k();
        if k == 0 || k >= self.n {
            return bad(format!("need 0 < k < n, got k = {k}"));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.mode != Mode::CheckDesign
            && matches!(self.decoder, DecoderKind::Sparc | DecoderKind::Spex)
            && self.design != DesignKind::SpatiallyCoupled
        {
            return bad(format!("decoder {} needs --design sc", self.decoder));
        }
        if self.decoder == DecoderKind::Map && self.n > 63 {
            return bad("map decoder is limited to n <= 63".into());
        }
        if let Some(z) = self.zeta {
            if !(z > 0.0 && z < 1.0) {
                return bad("zeta must lie in (0,1)".into());
            }
        }
        if !(self.margin >= 0.0) {
            return bad("margin must be non-negative".into());
        }
        if let Some(d) = self.d {
            if !(d > 0.0) {
                return bad("d must be positive".into());
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- rates

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub theta: f64,
    pub c_sh: f64,
    pub c_ex: f64,
    pub d_opt: f64,
    pub c_ex1: f64,
    pub c_ex2: f64,
    pub c_dd: Option<f64>,
    pub dd_alpha: Option<f64>,
    pub dd_beta: Option<f64>,
    pub dd_d: Option<f64>,
    pub rate_ex: f64,
    pub rate_sh: f64,
    pub rate_dd: Option<f64>,
}

pub fn run_rates(cfg: &ExperimentConfig) -> Result<Vec<RateRow>> {
    cfg.validate()?;
    let opts = RateOptions::default();
    with_pool(cfg.jobs, || {
        cfg.theta_grid
            .par_iter()
            .map(|&theta| {
                let r = rate_report(theta, &cfg.channel, cfg.with_dd, &opts)?;
                Ok(RateRow {
                    theta,
                    c_sh: r.c_sh,
                    c_ex: r.c_ex,
                    d_opt: r.d_opt,
                    c_ex1: r.c_ex1_at_dopt,
                    c_ex2: r.c_ex2_at_dopt,
                    c_dd: r.dd.map(|d| d.c_dd),
                    dd_alpha: r.dd.map(|d| d.alpha),
                    dd_beta: r.dd.map(|d| d.beta),
                    dd_d: r.dd.map(|d| d.d),
                    rate_ex: 1.0 / r.c_ex,
                    rate_sh: 1.0 / r.c_sh,
                    rate_dd: r.dd.map(|d| 1.0 / d.c_dd),
                })
            })
            .collect()
    })
}

// ---------------------------------------------------------------- planning

/// Everything fixed across the trials of one configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub k: usize,
    pub c_sh: f64,
    pub exact: ExactRate,
    pub dd: DdRate,
    /// Baseline constant and density picked by the target.
    pub c_base: f64,
    pub c: f64,
    pub d: f64,
    pub sc: Option<ScParams>,
    /// `(m, Δ)` of the constant-column design.
    pub cc: Option<(usize, usize)>,
    pub threshold: Option<ThresholdSpec>,
}

impl Plan {
    pub fn tests(&self) -> usize {
        match (&self.sc, self.cc) {
            (Some(p), _) => p.m_total(),
            (None, Some((m, _))) => m,
            _ => 0,
        }
    }

    pub fn d_eff(&self) -> f64 {
        match (&self.sc, self.cc) {
            (Some(p), _) => p.d_eff,
            (None, Some((m, delta))) => (self.k * delta) as f64 / m as f64,
            _ => self.d,
        }
    }
}

pub fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    cfg.validate()?;
    let ch = &cfg.channel;
    let k = cfg.k();
    let exact = c_exact(cfg.theta, ch);
    let dd = c_dd(cfg.theta, ch)?;
    let c_sh = shannon_constant(ch);
    let (c_base, d_base) = match cfg.target {
        Target::Sparc => (c_sh, d_shannon(ch)?),
        Target::Spex => (exact.c_ex, exact.d_opt),
        Target::Dd => (dd.c_dd, dd.d),
    };
    let c = cfg.c_mult * c_base;
    let d = cfg.d.unwrap_or(d_base);
    let lnk = (cfg.n as f64 / k as f64).ln();
    let (sc, cc) = match cfg.design {
        DesignKind::SpatiallyCoupled => (Some(derive_sc_params(cfg.n, cfg.theta, c, d, &dd, Some(k))?), None),
        DesignKind::ConstantColumn => {
            let m = ((c * k as f64 * lnk).round() as usize).max(1);
            let delta = ((d * m as f64 / k as f64).round() as usize).clamp(1, m);
            (None, Some((m, delta)))
        }
    };
    let mut p = Plan { k, c_sh, exact, dd, c_base, c, d, sc, cc, threshold: None };
    if cfg.decoder == DecoderKind::Spex {
        let sc = p.sc.as_ref().expect("validated");
        let floor = c_ex1(sc.d_eff, cfg.theta, ch).max(c_ex2(sc.d_eff, ch));
        if sc.c_eff < (1.0 + cfg.margin) * floor {
            return Err(Error::Threshold(format!(
                "c = {:.4} is within the {}% margin of c_ex = {floor:.4} at d = {:.4}",
                sc.c_eff,
                cfg.margin * 100.0,
                sc.d_eff
            )));
        }
        p.threshold = Some(build_threshold(sc.c_eff, sc.d_eff, cfg.theta, ch, cfg.eps_prime)?);
    }
    Ok(p)
}

fn build_design<R: Rng + ?Sized>(cfg: &ExperimentConfig, plan: &Plan, rng: &mut R) -> Result<TestDesign> {
    match (&plan.sc, plan.cc) {
        (Some(p), _) => build_sc(p, rng),
        (None, Some((m, delta))) => build_cc(cfg.n, m, delta, rng),
        _ => Err(Error::Config("plan has no design".into())),
    }
}

// ---------------------------------------------------------------- trials

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial_id: u64,
    pub decoder: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub c_mult: f64,
    pub hamming_error: Option<usize>,
    pub exact_recovery: u8,
    pub rounds_used: usize,
    pub wall_time_ms: f64,
    /// Whether the seed compartments were misdiagnosed (coupled design only).
    pub seed_failure: Option<u8>,
    /// SPEX: errors of `τ⁽¹⁾` and after each round, `;`-separated.
    pub round_errors: String,
    pub status: String,
}

struct Outcome {
    error: usize,
    rounds: usize,
    seed_failure: Option<u8>,
    round_errors: Vec<usize>,
}

fn sparc_config(cfg: &ExperimentConfig, plan: &Plan, design: &TestDesign) -> Result<SparcConfig> {
    let d_eff = plan.sc.as_ref().map_or(plan.d, |p| p.d_eff);
    let mut sc = SparcConfig::new(&cfg.channel, design, d_eff, &plan.dd)?.with_tolerance_multiplier(cfg.tolerance_mult);
    if let Some(z) = cfg.zeta {
        sc = sc.with_zeta(z);
    }
    Ok(sc)
}

fn decode_trial(cfg: &ExperimentConfig, plan: &Plan, trial: u64) -> Result<Outcome> {
    let ch = &cfg.channel;
    let design = build_design(cfg, plan, &mut stream(cfg.master_seed, trial, Role::Design))?;
    let sigma = sample_ground_truth(cfg.n, plan.k, &mut stream(cfg.master_seed, trial, Role::Truth));
    let inst = Instance::generate(&design, sigma, ch, &mut stream(cfg.master_seed, trial, Role::Noise));
    let shown = &inst.displayed;
    let mut rounds = 1;
    let mut round_errors = Vec::new();
    let est: Vec<bool> = match cfg.decoder {
        DecoderKind::Dd => dd_decode(&design, shown, plan.dd.alpha, plan.dd.beta, design.delta).to_bits()?,
        DecoderKind::Sparc => sparc_decode(&design, shown, ch, &sparc_config(cfg, plan, &design)?)?.to_bits()?,
        DecoderKind::Spex => {
            let spec = plan.threshold.as_ref().ok_or_else(|| Error::Config("missing threshold".into()))?;
            let out = spex_decode(&design, shown, ch, &sparc_config(cfg, plan, &design)?, spec)?;
            rounds = out.rounds_used;
            for tau in &out.history {
                round_errors.push(hamming_error(tau, &inst.sigma)?);
            }
            out.estimate.to_bits()?
        }
        DecoderKind::Bp => {
            let out = bp_decode(&design, shown, ch, plan.k, cfg.t_max, PriorMode::ProductBernoulli)?;
            rounds = out.rounds;
            out.estimate.to_bits()?
        }
        DecoderKind::Map => {
            let table = exhaustive_posterior(&design, shown, ch, plan.k, PriorMode::HardK)?;
            let (best, _) = table.map();
            (0..cfg.n).map(|x| best >> x & 1 == 1).collect()
        }
    };
    let seed_failure = design.sc.as_ref().map(|sc| {
        (0..cfg.n).any(|x| sc.is_seed(x) && est[x] != inst.sigma[x]) as u8
    });
    Ok(Outcome { error: hamming_error(&est, &inst.sigma)?, rounds, seed_failure, round_errors })
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| e.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

pub fn run_trial(cfg: &ExperimentConfig, plan: &Plan, trial: u64) -> TrialResult {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(|| decode_trial(cfg, plan, trial)));
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut r = TrialResult {
        trial_id: trial,
        decoder: cfg.decoder.tag().into(),
        n: cfg.n,
        k: plan.k,
        m: plan.tests(),
        c_mult: cfg.c_mult,
        hamming_error: None,
        exact_recovery: 0,
        rounds_used: 0,
        wall_time_ms,
        seed_failure: None,
        round_errors: String::new(),
        status: "ok".into(),
    };
    match res {
        Ok(Ok(o)) => {
            r.hamming_error = Some(o.error);
            r.exact_recovery = (o.error == 0) as u8;
            r.rounds_used = o.rounds;
            r.seed_failure = o.seed_failure;
            r.round_errors = o.round_errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";");
        }
        Ok(Err(e)) => r.status = format!("error: {e}"),
        Err(p) => r.status = format!("panic: {}", panic_message(p)),
    }
    r
}

/// Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let centre = (p + z2 / (2.0 * t)) / denom;
    let half = z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub failed_trials: usize,
    pub mean_error: f64,
    pub err_ci_half: f64,
    pub exact_fraction: f64,
    pub exact_ci_lo: f64,
    pub exact_ci_hi: f64,
    pub mean_rounds: f64,
    pub total_wall_time_ms: f64,
}

pub fn aggregate(rows: &[TrialResult]) -> Aggregate {
    let errs: Vec<f64> = rows.iter().filter_map(|r| r.hamming_error.map(|e| e as f64)).collect();
    let ok = errs.len();
    let mean = if ok > 0 { errs.iter().sum::<f64>() / ok as f64 } else { f64::NAN };
    let half = if ok > 1 {
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (ok - 1) as f64;
        Z95 * (var / ok as f64).sqrt()
    } else {
        0.0
    };
    let exact = rows.iter().filter(|r| r.exact_recovery == 1).count();
    let (lo, hi) = wilson_interval(exact, rows.len(), Z95);
    Aggregate {
        trials: rows.len(),
        failed_trials: rows.len() - ok,
        mean_error: mean,
        err_ci_half: half,
        exact_fraction: if rows.is_empty() { 0.0 } else { exact as f64 / rows.len() as f64 },
        exact_ci_lo: lo,
        exact_ci_hi: hi,
        mean_rounds: rows.iter().map(|r| r.rounds_used as f64).sum::<f64>() / rows.len().max(1) as f64,
        total_wall_time_ms: rows.iter().map(|r| r.wall_time_ms).sum(),
    }
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub plan: Plan,
    pub rows: Vec<TrialResult>,
    pub aggregate: Aggregate,
}

impl SimulationReport {
    /// Median error after each SPEX stage (`τ⁽¹⁾` first); runs that stopped
    /// early at a fixed point keep their last value.
    pub fn median_round_errors(&self) -> Vec<f64> {
        let series: Vec<Vec<usize>> = self
            .rows
            .iter()
            .filter(|r| !r.round_errors.is_empty())
            .map(|r| r.round_errors.split(';').filter_map(|v| v.parse().ok()).collect())
            .collect();
        let len = series.iter().map(Vec::len).max().unwrap_or(0);
        (0..len)
            .map(|i| {
                let mut col: Vec<usize> = series.iter().map(|s| s[i.min(s.len() - 1)]).collect();
                col.sort_unstable();
                let h = col.len() / 2;
                if col.len() % 2 == 1 {
                    col[h] as f64
                } else {
                    (col[h - 1] + col[h]) as f64 / 2.0
                }
            })
            .collect()
    }

    /// Trial rows followed by one `aggregate` row.
    pub fn write_csv<W: Write>(&self, w: W, with_timing: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "trial_id", "decoder", "n", "k", "m", "c_mult", "hamming_error", "exact_recovery", "rounds_used",
            "wall_time_ms", "seed_failure", "round_errors", "status", "err_ci_half", "exact_ci_lo", "exact_ci_hi",
        ];
        if !with_timing {
            header.retain(|h| *h != "wall_time_ms");
        }
        out.write_record(&header)?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![
                r.trial_id.to_string(),
                r.decoder.clone(),
                r.n.to_string(),
                r.k.to_string(),
                r.m.to_string(),
                r.c_mult.to_string(),
                opt(r.hamming_error.map(|e| e.to_string())),
                r.exact_recovery.to_string(),
                r.rounds_used.to_string(),
                format!("{:.3}", r.wall_time_ms),
                opt(r.seed_failure.map(|e| e.to_string())),
                r.round_errors.clone(),
                r.status.clone(),
                String::new(),
                String::new(),
                String::new(),
            ];
            if !with_timing {
                rec.remove(9);
            }
            out.write_record(&rec)?;
        }
        let a = &self.aggregate;
        let first = self.rows.first();
        let mut rec = vec![
            "aggregate".to_string(),
            first.map(|r| r.decoder.clone()).unwrap_or_default(),
            first.map(|r| r.n.to_string()).unwrap_or_default(),
            self.plan.k.to_string(),
            self.plan.tests().to_string(),
            first.map(|r| r.c_mult.to_string()).unwrap_or_default(),
            a.mean_error.to_string(),
            a.exact_fraction.to_string(),
            a.mean_rounds.to_string(),
            format!("{:.3}", a.total_wall_time_ms),
            String::new(),
            String::new(),
            format!("failed={}", a.failed_trials),
            a.err_ci_half.to_string(),
            a.exact_ci_lo.to_string(),
            a.exact_ci_hi.to_string(),
        ];
        if !with_timing {
            rec.remove(9);
        }
        out.write_record(&rec)?;
        out.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
        Ok(())
    }

    pub fn to_csv_string(&self, with_timing: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_timing)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }
}

fn with_pool<T: Send, F: FnOnce() -> T + Send>(jobs: usize, f: F) -> T {
    if jobs == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn run_simulation(cfg: &ExperimentConfig) -> Result<SimulationReport> {
    let plan = plan(cfg)?;
    let rows: Vec<TrialResult> =
        with_pool(cfg.jobs, || (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(cfg, &plan, t)).collect());
    let aggregate = aggregate(&rows);
    Ok(SimulationReport { plan, rows, aggregate })
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub c_mult: f64,
    pub decoder: String,
    pub n: usize,
    pub k: usize,
    pub m: Option<usize>,
    pub trials: usize,
    pub failed_trials: usize,
    pub mean_error: Option<f64>,
    pub err_ci_half: Option<f64>,
    pub exact_fraction: Option<f64>,
    pub exact_ci_lo: Option<f64>,
    pub exact_ci_hi: Option<f64>,
    pub status: String,
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &theta in &cfg.theta_grid {
        for &c_mult in &cfg.c_mult_grid {
            let mut c = cfg.clone();
            c.theta = theta;
            c.c_mult = c_mult;
            c.mode = Mode::Simulate;
            let mut row = SweepRow {
                theta,
                c_mult,
                decoder: c.decoder.tag().into(),
                n: c.n,
                k: c.k(),
                m: None,
                trials: c.trials,
                failed_trials: 0,
                mean_error: None,
                err_ci_half: None,
                exact_fraction: None,
                exact_ci_lo: None,
                exact_ci_hi: None,
                status: "ok".into(),
            };
            match run_simulation(&c) {
                Ok(rep) => {
                    let a = rep.aggregate;
                    row.m = Some(rep.plan.tests());
                    row.failed_trials = a.failed_trials;
                    row.mean_error = Some(a.mean_error);
                    row.err_ci_half = Some(a.err_ci_half);
                    row.exact_fraction = Some(a.exact_fraction);
                    row.exact_ci_lo = Some(a.exact_ci_lo);
                    row.exact_ci_hi = Some(a.exact_ci_hi);
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Serialize rows with a header to any writer.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}

// ---------------------------------------------------------------- design check

/// Concentration bands from the design's basic properties.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct BandViolations {
    /// Compartments with an infected count outside `k/ℓ ± √(k/ℓ) ln n`.
    pub g1: usize,
    /// Per-compartment test counts outside `(m/ℓ) q ± √m ln³ n`.
    pub g2: usize,
    /// Whole-design test counts outside `m q ± √m ln³ n`.
    pub cc3: usize,
    /// Individuals whose degree differs from the design's nominal degree.
    pub degree: usize,
}

impl BandViolations {
    pub fn clean(&self) -> bool {
        self.g1 + self.g2 + self.cc3 + self.degree == 0
    }
}

/// Counts `[F0-, F0+, F1-, F1+]` (actual outcome, displayed outcome) over `tests`.
fn outcome_counts(actual: &[bool], shown: &[bool], tests: impl Iterator<Item = usize>) -> [usize; 4] {
    let mut c = [0; 4];
    for a in tests {
        c[2 * actual[a] as usize + shown[a] as usize] += 1;
    }
    c
}

fn band_misses(counts: [usize; 4], tests: f64, m: f64, d: f64, n: f64, ch: &NoiseChannel) -> usize {
    let e = (-d).exp();
    let expect = [
        tests * e * ch.p00(),
        tests * e * ch.p01(),
        tests * (1.0 - e) * ch.p10(),
        tests * (1.0 - e) * ch.p11(),
    ];
    let slack = m.sqrt() * n.ln().powi(3);
    counts.iter().zip(expect).filter(|(&c, x)| (c as f64 - x).abs() > slack).count()
}

pub fn check_bands(design: &TestDesign, inst: &Instance, k: usize, ch: &NoiseChannel) -> BandViolations {
    let n = design.n as f64;
    let mut v = BandViolations::default();
    match &design.sc {
        Some(sc) => {
            let ell = sc.ell as f64;
            let mean = k as f64 / ell;
            let slack = mean.sqrt() * n.ln();
            let d = (k * sc.delta) as f64 / sc.m as f64;
            for i in 1..=sc.ell {
                let inf = sc.individuals(i).filter(|&x| inst.sigma[x]).count() as f64;
                if (inf - mean).abs() > slack {
                    v.g1 += 1;
                }
                let counts = outcome_counts(&inst.actual, &inst.displayed, sc.tests(i));
                v.g2 += band_misses(counts, sc.m as f64 / ell, sc.m as f64, d, n, ch);
            }
            for x in 0..design.n {
                let mut seed = 0;
                let mut rest = 0;
                for &a in &design.individuals[x] {
                    if sc.test_comp[a as usize] == 0 {
                        seed += 1;
                    } else {
                        rest += 1;
                    }
                }
                let want_seed = if sc.is_seed(x) { sc.delta0 } else { 0 };
                if rest != sc.delta || seed != want_seed {
                    v.degree += 1;
                }
            }
        }
        None => {
            let m = design.m_total() as f64;
            let d = (k * design.delta) as f64 / m;
            let counts = outcome_counts(&inst.actual, &inst.displayed, 0..design.m_total());
            v.cc3 += band_misses(counts, m, m, d, n, ch);
            v.degree = design.individuals.iter().filter(|t| t.len() != design.delta).count();
        }
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignCheckReport {
    pub design: String,
    pub runs: usize,
    pub clean_runs: usize,
    pub g1_violations: usize,
    pub g2_violations: usize,
    pub cc3_violations: usize,
    pub degree_violations: usize,
    pub d_requested: f64,
    pub d_effective: f64,
    pub pass: bool,
}

/// Build `trials` designs and count band violations; passes when at least
/// 95% of the runs are clean and every degree is exact.
pub fn run_design_check(cfg: &ExperimentConfig) -> Result<DesignCheckReport> {
    let mut c = cfg.clone();
    // the decoder plays no part here
    c.decoder = DecoderKind::Dd;
    let plan = plan(&c)?;
    let per_run: Vec<BandViolations> = with_pool(cfg.jobs, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|r| -> Result<BandViolations> {
                let design = build_design(&c, &plan, &mut stream(cfg.master_seed, r, Role::Design))?;
                let sigma = sample_ground_truth(cfg.n, plan.k, &mut stream(cfg.master_seed, r, Role::Truth));
                let inst = Instance::generate(&design, sigma, &cfg.channel, &mut stream(cfg.master_seed, r, Role::Noise));
                Ok(check_bands(&design, &inst, plan.k, &cfg.channel))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let clean = per_run.iter().filter(|v| v.clean()).count();
    let sum = |f: fn(&BandViolations) -> usize| per_run.iter().map(f).sum::<usize>();
    let degree = sum(|v| v.degree);
    Ok(DesignCheckReport {
        design: cfg.design.tag().into(),
        runs: per_run.len(),
        clean_runs: clean,
        g1_violations: sum(|v| v.g1),
        g2_violations: sum(|v| v.g2),
        cc3_violations: sum(|v| v.cc3),
        degree_violations: degree,
        d_requested: plan.d,
        d_effective: plan.d_eff(),
        pass: degree == 0 && clean * 100 >= 95 * per_run.len(),
    })
}

// ---------------------------------------------------------------- oracle check

/// A small random instance for the exact-posterior cross-checks.
#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub design: TestDesign,
    pub displayed: Vec<bool>,
    pub channel: NoiseChannel,
    pub k: usize,
}

fn random_channel<R: Rng + ?Sized>(rng: &mut R) -> NoiseChannel {
    loop {
        let p01 = rng.gen_range(0.0..0.4);
        let p11 = rng.gen_range(0.6..1.0);
        if let Ok(ch) = NoiseChannel::new(1.0 - p01, p01, 1.0 - p11, p11) {
            return ch;
        }
    }
}

/// Random instance with `n <= 12`, `k <= 3`, `m <= 8`; with `forest` the
/// factor graph is acyclic.
pub fn small_instance<R: Rng + ?Sized>(rng: &mut R, forest: bool) -> Result<SmallInstance> {
    let n = rng.gen_range(4..=12);
    let k = rng.gen_range(1..=3);
    let m = rng.gen_range(0..=8);
    let mut tests = Vec::with_capacity(m);
    // union-find over individuals and tests keeps the graph a forest
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    for _ in 0..m {
        let size = rng.gen_range(1..=4usize.min(n));
        order.shuffle(rng);
        let mut members = Vec::with_capacity(size);
        for &x in &order {
            if members.len() == size {
                break;
            }
            if forest {
                let rx = root(&mut parent, x as usize);
                if members.iter().any(|&y: &u32| root(&mut parent, y as usize) == rx) {
                    continue;
                }
            }
            members.push(x);
        }
        if forest {
            let r0 = root(&mut parent, members[0] as usize);
            for &y in &members[1..] {
                let ry = root(&mut parent, y as usize);
                parent[ry] = r0;
            }
        }
        tests.push(members);
    }
    let design = TestDesign::from_member_lists(n, tests)?;
    let channel = if rng.gen_bool(0.2) { NoiseChannel::noiseless() } else { random_channel(rng) };
    let sigma = sample_ground_truth(n, k, rng);
    let inst = Instance::generate(&design, sigma, &channel, rng);
    Ok(SmallInstance { design, displayed: inst.displayed, channel, k })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleReport {
    pub instances: usize,
    pub normalization_failures: usize,
    pub map_failures: usize,
    pub bp_failures: usize,
    pub max_normalization_error: f64,
    pub max_bp_error: f64,
    pub pass: bool,
}

/// Largest `Π ψ_a` over weight-`k` configurations, scanning member lists
/// rather than bitmasks.
pub fn brute_force_map_weight(inst: &SmallInstance) -> f64 {
    let n = inst.design.n;
    let mut best: f64 = 0.0;
    for s in 0u32..1 << n {
        if s.count_ones() as usize != inst.k {
            continue;
        }
        let mut w = 1.0;
        for (t, &shown) in inst.design.tests.iter().zip(&inst.displayed) {
            let positive = t.iter().any(|&x| s >> x & 1 == 1);
            w *= inst.channel.prob(positive, shown);
        }
        best = best.max(w);
    }
    best
}

pub fn run_oracle_check(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let instances = if cfg.trials == 0 { 100 } else { cfg.trials };
    let mut rep = OracleReport { instances, ..Default::default() };
    for i in 0..instances as u64 {
        let mut rng = stream(cfg.master_seed, i, Role::Aux);
        let inst = small_instance(&mut rng, false)?;
        let table = exhaustive_posterior(&inst.design, &inst.displayed, &inst.channel, inst.k, PriorMode::HardK)?;
        let norm = (table.total() - 1.0).abs();
        rep.max_normalization_error = rep.max_normalization_error.max(norm);
        if norm > 1e-12 {
            rep.normalization_failures += 1;
        }
        let (best, p) = table.map();
        let brute = brute_force_map_weight(&inst);
        let w = crate::decode::exact::psi_of(&inst.design, &inst.displayed, &inst.channel, best);
        if (w - brute).abs() > 1e-12 * brute || (p - brute / table.z).abs() > 1e-12 {
            rep.map_failures += 1;
        }

        let forest = small_instance(&mut rng, true)?;
        let exact = exhaustive_posterior(&forest.design, &forest.displayed, &forest.channel, forest.k, PriorMode::ProductBernoulli)?;
        let bp = bp_decode(&forest.design, &forest.displayed, &forest.channel, forest.k, cfg.t_max.max(forest.design.n + 2), PriorMode::ProductBernoulli)?;
        let err = exact
            .marginals()
            .iter()
            .zip(bp.marginals())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rep.max_bp_error = rep.max_bp_error.max(err);
        if err > 1e-8 {
            rep.bp_failures += 1;
        }
    }
    rep.pass = rep.normalization_failures + rep.map_failures + rep.bp_failures == 0;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let cfg = ExperimentConfig::from_kv(
            "# demo\nmode = sweep\nchannel = bsc:0.1\nn=2000\ntheta=0.4\nc-mult=2\ndesign=cc\ndecoder=dd\ntheta_grid=0.2,0.3\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Sweep);
        assert_eq!(cfg.n, 2000);
        assert_eq!(cfg.c_mult, 2.0);
        assert_eq!(cfg.design, DesignKind::ConstantColumn);
        assert_eq!(cfg.theta_grid, vec![0.2, 0.3]);
        assert!(ExperimentConfig::from_kv("colour=blue").is_err());
        assert!(ExperimentConfig::from_kv("n").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig { design: DesignKind::ConstantColumn, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.decoder = DecoderKind::Dd;
        assert!(cfg.validate().is_ok());
        cfg.theta = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(20, 20, Z95);
        assert!(hi == 1.0 && lo > 0.8 && lo < 0.85);
        let (lo, hi) = wilson_interval(0, 20, Z95);
        assert!(lo == 0.0 && hi < 0.2);
        let (lo, hi) = wilson_interval(10, 20, Z95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forest_instances_are_acyclic() {
        let mut rng = stream(5, 0, Role::Aux);
        for _ in 0..50 {
            let inst = small_instance(&mut rng, true).unwrap();
            let edges: usize = inst.design.tests.iter().map(Vec::len).sum();
            let nodes = inst.design.n + inst.design.m_total();
            // a forest on the bipartite graph has at most nodes - 1 edges per component
            assert!(edges < nodes);
        }
    }
}
