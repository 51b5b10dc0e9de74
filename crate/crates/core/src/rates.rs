//! Rate thresholds: exact-recovery constants, the DD constant, and the
//! rational threshold function used by SPEX.
//!
//! Notation: `e = exp(-d)`, `K = d(1-θ)`. All constants `c` are in units of
//! `k log(n/k)` tests.

use num_rational::Rational64;
use serde::Serialize;

use crate::channel::{h, kl, marginal_output_rates, mutual_info_rate, shannon_constant, NoiseChannel};
use crate::error::{Error, Result};
use crate::numeric::{bisect_predicate, bisect_root, golden_min, grid_golden_min, threshold_search};

const C_TOL: f64 = 1e-11;
const Y_TOL: f64 = 1e-11;
const Z_TOL: f64 = 1e-13;

/// Tunables for the outer optimization over the test density `d`.
#[derive(Debug, Clone, Copy)]
pub struct RateOptions {
    pub d_lo: f64,
    pub d_hi: f64,
    pub d_grid: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { d_lo: 0.05, d_hi: 6.0, d_grid: 32 }
    }
}

fn clamp_theta(theta: f64) -> f64 {
    theta.clamp(1e-3, 1.0 - 1e-3)
}

/// The open interval `𝒴(c,d,θ) = {y : c d (1-θ) KL(y‖e^{-d}) < θ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YInterval {
    pub lo: f64,
    pub hi: f64,
}

impl YInterval {
    pub fn contains(&self, y: f64) -> bool {
        // endpoints 0 and 1 are inside when the constraint is slack there
        (y > self.lo || (self.lo == 0.0 && y == 0.0)) && (y < self.hi || (self.hi == 1.0 && y == 1.0))
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn admissible_interval(c: f64, d: f64, theta: f64) -> YInterval {
    let e = (-d).exp();
    let t = theta / (c * d * (1.0 - theta));
    if !t.is_finite() {
        return YInterval { lo: 0.0, hi: 1.0 };
    }
    let lo = if kl(0.0, e) < t {
        0.0
    } else {
        bisect_root(|y| kl(y, e) - t, 0.0, e, 1e-15)
    };
    let hi = if kl(1.0, e) < t {
        1.0
    } else {
        bisect_root(|y| kl(y, e) - t, e, 1.0, 1e-15)
    };
    YInterval { lo, hi }
}

/// The threshold `𝔷(y) ∈ [p01, p11]` with `cK(KL(y‖e) + y KL(𝔷‖p11)) = θ`.
///
/// Values outside the solvable range clamp to the nearer end.
pub fn z_of_y(c: f64, d: f64, theta: f64, y: f64, ch: &NoiseChannel) -> Result<f64> {
    if ch.p11() >= 1.0 {
        return Err(Error::Domain("z_of_y undefined for p11 = 1 (threshold is identically 1)".into()));
    }
    if y <= 0.0 {
        return Err(Error::Domain("z_of_y needs y > 0".into()));
    }
    Ok(z_unchecked(c, d, theta, y, ch))
}

fn z_unchecked(c: f64, d: f64, theta: f64, y: f64, ch: &NoiseChannel) -> f64 {
    let (p01, p11) = (ch.p01(), ch.p11());
    if p11 >= 1.0 {
        return 1.0;
    }
    let e = (-d).exp();
    let t = (theta / (c * d * (1.0 - theta)) - kl(y, e)) / y;
    if t <= 0.0 {
        return p11;
    }
    if t >= kl(p01, p11) {
        return p01;
    }
    bisect_root(|z| kl(z, p11) - t, p01, p11, Z_TOL)
}

/// `c_ex,0(d,θ)`.
pub fn c_ex0(d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    let e = (-d).exp();
    let k = d * (1.0 - theta);
    if ch.p11() >= 1.0 {
        // inf{c : 0 ∉ 𝒴}
        return theta / (k * kl(0.0, e));
    }
    let b = kl(ch.p01(), ch.p11());
    let feasible = |c: f64| {
        let iv = admissible_interval(c, d, theta);
        let f = |y: f64| c * k * (kl(y, e) + y * b);
        let (_, inner) = golden_min(f, iv.lo, iv.hi, Y_TOL);
        inner.min(f(iv.lo)).min(f(iv.hi)) >= theta
    };
    threshold_search(feasible, 1.0, 1e15, C_TOL).unwrap_or(f64::INFINITY)
}

/// `inf_{y ∈ 𝒴(c)} cK(KL(y‖e) + y KL(𝔷(y)‖p01))`.
fn sep_objective(c: f64, d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    let e = (-d).exp();
    let k = d * (1.0 - theta);
    let iv = admissible_interval(c, d, theta);
    let f = |y: f64| {
        let z = z_unchecked(c, d, theta, y, ch);
        c * k * (kl(y, e) + y * kl(z, ch.p01()))
    };
    let (_, v) = grid_golden_min(f, iv.lo, iv.hi, 40, false, Y_TOL);
    v.min(f(iv.lo)).min(f(iv.hi))
}

/// `c_ex,1(d,θ)`.
pub fn c_ex1(d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    let c0 = c_ex0(d, theta, ch);
    if ch.p01() <= 0.0 || !c0.is_finite() {
        return c0;
    }
    let pred = |c: f64| c > c0 && sep_objective(c, d, theta, ch) >= 1.0;
    let mut hi = c0 * 2.0;
    while !pred(hi) {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    bisect_predicate(pred, c0, hi, C_TOL)
}

/// `c_ex,2(d) = 1 / I(d)`.
pub fn c_ex2(d: f64, ch: &NoiseChannel) -> f64 {
    1.0 / mutual_info_rate(ch, d)
}

/// Optimal exact-recovery constant and the corresponding density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactRate {
    pub c_ex: f64,
    pub d_opt: f64,
    pub c_ex1: f64,
    pub c_ex2: f64,
}

pub fn c_exact(theta: f64, ch: &NoiseChannel) -> ExactRate {
    c_exact_with(theta, ch, &RateOptions::default())
}

pub fn c_exact_with(theta: f64, ch: &NoiseChannel, opts: &RateOptions) -> ExactRate {
    let theta = clamp_theta(theta);
    let f = |d: f64| c_ex1(d, theta, ch).max(c_ex2(d, ch));
    let (d, v) = grid_golden_min(f, opts.d_lo, opts.d_hi, opts.d_grid, true, 1e-9);
    ExactRate { c_ex: v, d_opt: d, c_ex1: c_ex1(d, theta, ch), c_ex2: c_ex2(d, ch) }
}

/// `c_DD` with its optimal thresholds `(α, β)` and density `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DdRate {
    pub c_dd: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
}

pub fn c_dd1(alpha: f64, d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    theta / (d * (1.0 - theta) * kl(alpha, ch.p10()))
}

pub fn c_dd2(alpha: f64, d: f64, ch: &NoiseChannel) -> f64 {
    let (q0m, _) = marginal_output_rates(ch, d);
    1.0 / (d * kl(alpha, q0m))
}

pub fn c_dd3(beta: f64, d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    theta / (d * (1.0 - theta) * kl(beta, ch.p11() * (-d).exp()))
}

pub fn c_dd4(alpha: f64, beta: f64, d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    let e = (-d).exp();
    let (_, q0p) = marginal_output_rates(ch, d);
    let k = d * (1.0 - theta);
    let r = e * ch.p01() / q0p;
    let lo = (1.0 - alpha).max(beta);
    if r <= 0.0 && beta > 0.0 {
        // KL(β/z‖0) = ∞ on the whole range
        return 0.0;
    }
    let bracket = |z: f64| {
        let base = kl(z, q0p);
        if beta > z * r {
            base + z * kl(beta / z, r)
        } else {
            base
        }
    };
    let split = if r > 0.0 { beta / r } else { f64::INFINITY };
    let mut best = bracket(lo).min(bracket(1.0));
    if split > lo {
        let (_, v) = golden_min(bracket, lo, split.min(1.0), 1e-12);
        best = best.min(v);
    }
    if split < 1.0 {
        let (_, v) = golden_min(bracket, split.max(lo), 1.0, 1e-12);
        best = best.min(v);
    }
    1.0 / (k * best)
}

/// `max{c_DD,1..4}` at a given point.
pub fn c_dd_objective(alpha: f64, beta: f64, d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    c_dd1(alpha, d, theta, ch)
        .max(c_dd2(alpha, d, ch))
        .max(c_dd3(beta, d, theta, ch))
        .max(c_dd4(alpha, beta, d, theta, ch))
}

/// Best β for fixed (α, d): c_DD,3 grows with β, c_DD,4 shrinks.
fn dd_beta(alpha: f64, d: f64, theta: f64, ch: &NoiseChannel) -> (f64, f64) {
    let bmax = (-d).exp() * ch.p11();
    let bmin = 1e-9 * bmax;
    let g = |b: f64| c_dd3(b, d, theta, ch) - c_dd4(alpha, b, d, theta, ch);
    let b = if g(bmin) >= 0.0 {
        bmin
    } else {
        bisect_root(g, bmin, bmax * (1.0 - 1e-12), 1e-13)
    };
    (b, c_dd3(b, d, theta, ch).max(c_dd4(alpha, b, d, theta, ch)))
}

/// Best (α, β) for fixed d: c_DD,1 falls with α, everything else rises.
fn dd_at_d(d: f64, theta: f64, ch: &NoiseChannel) -> (f64, f64, f64) {
    let (q0m, _) = marginal_output_rates(ch, d);
    let (alo, ahi) = (ch.p10(), q0m);
    let span = ahi - alo;
    let rest = |a: f64| c_dd2(a, d, ch).max(dd_beta(a, d, theta, ch).1);
    let amin = alo + 1e-9 * span;
    let a = if c_dd1(amin, d, theta, ch) <= rest(amin) {
        amin
    } else {
        bisect_root(|a| c_dd1(a, d, theta, ch) - rest(a), amin, ahi - 1e-12 * span, 1e-13)
    };
    let (b, _) = dd_beta(a, d, theta, ch);
    (c_dd_objective(a, b, d, theta, ch), a, b)
}

pub fn c_dd(theta: f64, ch: &NoiseChannel) -> Result<DdRate> {
    c_dd_with(theta, ch, &RateOptions::default())
}

pub fn c_dd_with(theta: f64, ch: &NoiseChannel, opts: &RateOptions) -> Result<DdRate> {
    let theta = clamp_theta(theta);
    if ch.p10() >= ch.p00() {
        return Err(Error::Infeasible("p10 >= q0- for every d".into()));
    }
    let f = |d: f64| dd_at_d(d, theta, ch).0;
    let (d, v) = grid_golden_min(f, opts.d_lo, opts.d_hi, opts.d_grid.min(24), true, 1e-7);
    if !v.is_finite() {
        return Err(Error::Infeasible("no finite DD constant in the density bracket".into()));
    }
    let (c, alpha, beta) = dd_at_d(d, theta, ch);
    Ok(DdRate { c_dd: c, alpha, beta, d })
}

/// The local-stability constant of the constant-column analysis for
/// symmetric channels, `c_ls(d,θ)`.
pub fn chen_scarlett_cls(d: f64, theta: f64, ch: &NoiseChannel) -> Result<f64> {
    if !ch.is_symmetric() {
        return Err(Error::InvalidChannel("chen_scarlett_cls needs p00 = p11".into()));
    }
    let e = (-d).exp();
    let (p01, p11) = (ch.p01(), ch.p11());
    let inner = |y: f64, z: f64| {
        let a = (kl(y, e) + y * kl(z, p11)) / theta;
        let m = y * (2.0 * z - 1.0);
        let g = |yp: f64| {
            let zp = 0.5 + m / (2.0 * yp);
            kl(yp, e) + yp * kl(zp.clamp(0.0, 1.0), p01)
        };
        let lo = m.abs().max(1e-15);
        let (_, b) = golden_min(g, lo, 1.0, 1e-10);
        let b = b.min(g(lo)).min(g(1.0));
        a.max(b)
    };
    let over_z = |y: f64| grid_golden_min(|z| inner(y, z), 1e-9, 1.0 - 1e-9, 40, false, 1e-10).1;
    let (_, v) = grid_golden_min(over_z, 1e-9, 1.0 - 1e-9, 40, false, 1e-10);
    Ok(1.0 / ((1.0 - theta) * d * v))
}

/// Z-channel closed forms `(c_ex,1, c_ex,2)`.
pub fn closed_form_z_channel(d: f64, theta: f64, p11: f64) -> (f64, f64) {
    let e = (-d).exp();
    let p10 = 1.0 - p11;
    let c1 = -theta / (d * (1.0 - theta) * (1.0 - e * p11).ln());
    let c2 = 1.0 / (h(p10 + (1.0 - p10) * e) - (1.0 - e) * h(p10));
    (c1, c2)
}

/// Lower and upper bound on `c_ex,1` for the symmetric channel with flip
/// probability `p01`.
pub fn bsc_cex1_bounds(d: f64, theta: f64, p01: f64) -> (f64, f64) {
    let a = 2.0 * (p01 * (1.0 - p01)).sqrt();
    let lower = theta / (-(1.0 - theta) * d * (1.0 - (1.0 - a) * (-d).exp()).ln());
    (lower, lower / theta)
}

/// Minimizer and minimum of `y ↦ KL(y‖e^{-d}) + y KL(z‖p)`.
pub fn kl_min_profile(d: f64, z: f64, p: f64) -> (f64, f64) {
    let e = (-d).exp();
    let a = (-kl(z, p)).exp();
    let den = 1.0 - (1.0 - a) * e;
    (a * e / den, -den.ln())
}

/// Test budgets `m_SPARC` and `m_SPEX` for `k` infected among `n`.
pub fn m_sparc(n: usize, k: usize, ch: &NoiseChannel) -> f64 {
    shannon_constant(ch) * k as f64 * (n as f64 / k as f64).ln()
}

pub fn m_spex(n: usize, k: usize, theta: f64, ch: &NoiseChannel) -> f64 {
    c_exact(theta, ch).c_ex * k as f64 * (n as f64 / k as f64).ln()
}

/// One row of a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub theta: f64,
    pub c_sh: f64,
    pub c_ex: f64,
    pub d_opt: f64,
    pub c_ex1_at_dopt: f64,
    pub c_ex2_at_dopt: f64,
    pub dd: Option<DdRate>,
}

pub fn rate_report(theta: f64, ch: &NoiseChannel, with_dd: bool, opts: &RateOptions) -> Result<RateReport> {
    let ex = c_exact_with(theta, ch, opts);
    let dd = if with_dd { Some(c_dd_with(theta, ch, opts)?) } else { None };
    Ok(RateReport {
        theta,
        c_sh: shannon_constant(ch),
        c_ex: ex.c_ex,
        d_opt: ex.d_opt,
        c_ex1_at_dopt: ex.c_ex1,
        c_ex2_at_dopt: ex.c_ex2,
        dd,
    })
}

/// Rational interval `𝓘` and step function `𝒵` driving the SPEX update.
///
/// `breakpoints` has one more entry than `values`; cell `i` is
/// `[breakpoints[i], breakpoints[i+1])` and the interval is open at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    pub l: Rational64,
    pub r: Rational64,
    pub breakpoints: Vec<Rational64>,
    pub values: Vec<Rational64>,
    pub delta: f64,
    pub delta_prime: f64,
    pub eps_prime: f64,
    pub c: f64,
    pub d: f64,
    pub theta: f64,
}

const DENOM: i64 = 1_000_000;

fn to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

impl ThresholdSpec {
    /// Cell index of `y`, or `None` outside the open interval.
    pub fn cell(&self, y: Rational64) -> Option<usize> {
        if y <= self.l || y >= self.r {
            return None;
        }
        let i = self.breakpoints.partition_point(|b| *b <= y);
        Some((i - 1).min(self.values.len() - 1))
    }

    pub fn value_at(&self, y: Rational64) -> Option<Rational64> {
        self.cell(y).map(|i| self.values[i])
    }

    /// The SPEX rule for counts `Y` untainted and `Z` positive untainted
    /// tests at degree `Δ`: `Y/Δ ∈ 𝓘` and `Z/Y > 𝒵(Y/Δ)`, evaluated exactly.
    pub fn accepts(&self, y: u32, z: u32, delta: u32) -> bool {
        if y == 0 || delta == 0 {
            return false;
        }
        match self.value_at(Rational64::new(y as i64, delta as i64)) {
            Some(v) => (z as i128) * (*v.denom() as i128) > (*v.numer() as i128) * (y as i128),
            None => false,
        }
    }

    /// Re-run the Z1–Z4 checks on a grid of at least `points` y-values.
    pub fn verify(&self, ch: &NoiseChannel, points: usize) -> Result<()> {
        let s = Slacks::new(self.c, self.d, self.theta, ch);
        let (l, r) = (to_f64(self.l), to_f64(self.r));
        let dl = self.delta;
        if !(l > dl && r < 1.0 - dl) {
            return Err(Error::Threshold(format!("interval ({l}, {r}) not inside [δ, 1-δ] for δ={dl}")));
        }
        if s.z1(l + dl) <= dl || s.z1(r - dl) <= dl {
            return Err(Error::Threshold("Z1 violated".into()));
        }
        let (m2, m3) = s.grid_min(self, points);
        if m2 <= dl {
            return Err(Error::Threshold(format!("Z2 violated: slack {m2} <= δ {dl}")));
        }
        if m3 <= dl {
            return Err(Error::Threshold(format!("Z3 violated: slack {m3} <= δ {dl}")));
        }
        let jump = self
            .values
            .windows(2)
            .map(|w| (to_f64(w[1]) - to_f64(w[0])).abs())
            .fold(0.0, f64::max);
        if jump >= self.eps_prime {
            return Err(Error::Threshold(format!("Z4 violated: jump {jump} >= ε' {}", self.eps_prime)));
        }
        Ok(())
    }
}

/// Slack evaluations for the Z conditions at a fixed `(c, d, θ)`.
struct Slacks {
    ck: f64,
    e: f64,
    theta: f64,
    p01: f64,
    p11: f64,
}

impl Slacks {
    fn new(c: f64, d: f64, theta: f64, ch: &NoiseChannel) -> Self {
        Self { ck: c * d * (1.0 - theta), e: (-d).exp(), theta, p01: ch.p01(), p11: ch.p11() }
    }

    fn z1(&self, y: f64) -> f64 {
        self.ck * kl(y, self.e) - self.theta
    }

    fn z2(&self, y: f64, z: f64) -> f64 {
        self.ck * (kl(y, self.e) + y * kl(z, self.p11)) - self.theta
    }

    fn z3(&self, y: f64, z: f64) -> f64 {
        self.ck * (kl(y, self.e) + y * kl(z, self.p01)) - 1.0
    }

    /// Threshold at `y` keeping both Z2 and Z3 slack positive.
    fn target(&self, y: f64) -> f64 {
        let (p01, p11) = (self.p01, self.p11);
        match (p01 > 0.0, p11 < 1.0) {
            (false, false) => 0.5,
            (false, true) => {
                // Z3 is vacuous: keep half of the best Z2 slack
                let goal = 0.5 * self.z2(y, 0.0);
                bisect_root(|z| self.z2(y, z) - goal, 0.0, p11, Z_TOL)
            }
            (true, false) => {
                let goal = 0.5 * self.z3(y, 1.0);
                bisect_root(|z| self.z3(y, z) - goal, p01, 1.0, Z_TOL)
            }
            (true, true) => bisect_root(|z| self.z2(y, z) - self.z3(y, z), p01, p11, Z_TOL),
        }
    }

    fn grid_min(&self, spec: &ThresholdSpec, points: usize) -> (f64, f64) {
        let per = (points / spec.values.len()).max(4);
        let mut m2 = f64::INFINITY;
        let mut m3 = f64::INFINITY;
        for (i, v) in spec.values.iter().enumerate() {
            let (a, b) = (to_f64(spec.breakpoints[i]), to_f64(spec.breakpoints[i + 1]));
            let z = to_f64(*v);
            for j in 0..=per {
                let y = a + (b - a) * j as f64 / per as f64;
                m2 = m2.min(self.z2(y, z));
                m3 = m3.min(self.z3(y, z));
            }
        }
        (m2, m3)
    }
}

fn round_in(x: f64, up: bool) -> Rational64 {
    let s = x * DENOM as f64;
    let n = if up { s.ceil() } else { s.floor() };
    Rational64::new(n as i64, DENOM)
}

/// Build `𝓘`, `𝒵` and the slacks `δ`, `δ'` for a design at `(c, d)`.
///
/// Fails if `c` does not exceed `max(c_ex,1(d,θ), c_ex,2(d))`.
pub fn build_threshold(c: f64, d: f64, theta: f64, ch: &NoiseChannel, eps_prime: f64) -> Result<ThresholdSpec> {
    if eps_prime <= 0.0 {
        return Err(Error::Domain("eps_prime must be positive".into()));
    }
    let c1 = c_ex1(d, theta, ch);
    let cmax = c1.max(c_ex2(d, ch));
    if c <= cmax {
        return Err(Error::Threshold(format!("c = {c} does not exceed c_ex(d,θ) = {cmax}")));
    }
    let eps = c - cmax;
    let c_prime = c1 + eps / 2.0;
    let iv = admissible_interval(c_prime, d, theta);
    let l = round_in(iv.lo, true);
    let r = round_in(iv.hi, false);
    if l >= r || iv.lo <= 0.0 || iv.hi >= 1.0 {
        return Err(Error::Threshold(format!("admissible interval ({}, {}) too wide or empty", iv.lo, iv.hi)));
    }
    let slacks = Slacks::new(c, d, theta, ch);
    let (lf, rf) = (to_f64(l), to_f64(r));
    let clamp = |z: f64| {
        let lo = Rational64::new((ch.p01() * DENOM as f64).floor() as i64 + 1, DENOM);
        let hi = Rational64::new((ch.p11() * DENOM as f64).ceil() as i64 - 1, DENOM);
        round_in(z, false).max(lo).min(hi)
    };

    let mut nu = 8usize;
    loop {
        let width = r - l;
        let breakpoints: Vec<Rational64> =
            (0..=nu).map(|i| l + width * Rational64::new(i as i64, nu as i64)).collect();
        let values: Vec<Rational64> = (0..nu)
            .map(|i| {
                let mid = lf + (rf - lf) * (i as f64 + 0.5) / nu as f64;
                clamp(slacks.target(mid))
            })
            .collect();
        let jump = values
            .windows(2)
            .map(|w| (to_f64(w[1]) - to_f64(w[0])).abs())
            .fold(0.0, f64::max);
        if jump >= eps_prime && nu < 1 << 16 {
            nu *= 2;
            continue;
        }
        let mut spec = ThresholdSpec {
            l,
            r,
            breakpoints,
            values,
            delta: 0.0,
            delta_prime: (rf - lf) / nu as f64,
            eps_prime,
            c,
            d,
            theta,
        };
        let (m2, m3) = slacks.grid_min(&spec, 10_000);
        let slack = m2.min(m3);
        if slack <= 0.0 {
            if nu < 1 << 16 {
                nu *= 2;
                continue;
            }
            return Err(Error::Threshold(format!("no positive slack (min {slack}); margin too small")));
        }
        let mut delta = 0.5 * slack.min(1.0);
        for _ in 0..200 {
            if lf > delta && rf < 1.0 - delta && slacks.z1(lf + delta) > delta && slacks.z1(rf - delta) > delta {
                break;
            }
            delta *= 0.5;
        }
        spec.delta = delta;
        spec.verify(ch, 10_000)?;
        return Ok(spec);
    }
}
