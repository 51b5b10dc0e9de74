use noisy_gt::channel::{kl, marginal_output_rates, shannon_constant};
use noisy_gt::rates::{bsc_cex1_bounds, c_dd, c_dd_objective, c_ex0, c_ex1, c_exact, chen_scarlett_cls};
use noisy_gt::NoiseChannel;

/// Plain-grid version of the separation objective used to define `c_ex,1`.
fn grid_sep(c: f64, d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    let e = (-d).exp();
    let k = d * (1.0 - theta);
    let t = theta / (c * k);
    let mut best = f64::INFINITY;
    let steps = 20_000;
    for i in 0..=steps {
        let y = i as f64 / steps as f64;
        if kl(y, e) >= t || y == 0.0 {
            continue;
        }
        let r = (t - kl(y, e)) / y;
        let z = if r >= kl(ch.p01(), ch.p11()) {
            ch.p01()
        } else {
            let (mut lo, mut hi) = (ch.p01(), ch.p11());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if kl(mid, ch.p11()) > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        best = best.min(c * k * (kl(y, e) + y * kl(z, ch.p01())));
    }
    best
}

fn grid_cex1(d: f64, theta: f64, ch: &NoiseChannel) -> f64 {
    let c0 = c_ex0(d, theta, ch);
    let (mut lo, mut hi) = (c0, 2.0 * c0);
    while grid_sep(hi, d, theta, ch) < 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if grid_sep(mid, d, theta, ch) >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn cex1_matches_grid_search() {
    for &(p, d, theta) in &[(0.01, 0.69, 0.5), (0.05, 0.5, 0.3), (0.1, 0.9, 0.7), (0.2, 0.69, 0.2)] {
        let ch = NoiseChannel::bsc(p).unwrap();
        let got = c_ex1(d, theta, &ch);
        let want = grid_cex1(d, theta, &ch);
        assert!((got - want).abs() <= 2e-3 * want, "bsc {p} d {d} θ {theta}: {got} vs {want}");
        let (lo, hi) = bsc_cex1_bounds(d, theta, p);
        assert!(lo <= got * (1.0 + 1e-9) && got <= hi * (1.0 + 1e-9));
    }
}

#[test]
fn cex1_matches_local_stability_constant() {
    for &(p, d, theta) in &[(0.01, 0.69, 0.5), (0.1, 0.6, 0.4)] {
        let ch = NoiseChannel::bsc(p).unwrap();
        let a = c_ex1(d, theta, &ch);
        let b = chen_scarlett_cls(d, theta, &ch).unwrap();
        assert!((a - b).abs() <= 1e-3 * a, "{a} vs {b}");
    }
}

#[test]
fn dd_solver_is_not_beaten_by_grid() {
    for ch in [NoiseChannel::bsc(0.01).unwrap(), NoiseChannel::z(0.9).unwrap(), NoiseChannel::new(0.95, 0.05, 0.1, 0.9).unwrap()] {
        let theta = 0.4;
        let r = c_dd(theta, &ch).unwrap();
        let at = c_dd_objective(r.alpha, r.beta, r.d, theta, &ch);
        assert!((at - r.c_dd).abs() <= 1e-9 * r.c_dd);
        let mut grid = f64::INFINITY;
        for i in 1..30 {
            let d = 0.1 * (30f64).powf(i as f64 / 30.0);
            let e = (-d).exp();
            let (q0m, _) = marginal_output_rates(&ch, d);
            for a in 1..30 {
                let alpha = ch.p10() + (q0m - ch.p10()) * a as f64 / 30.0;
                for b in 1..30 {
                    let beta = ch.p11() * e * b as f64 / 30.0;
                    grid = grid.min(c_dd_objective(alpha, beta, d, theta, &ch));
                }
            }
        }
        assert!(r.c_dd <= grid * (1.0 + 1e-6), "{ch}: solver {} grid {grid}", r.c_dd);
        assert!(r.c_dd >= 0.9 * grid, "{ch}: solver {} far below grid {grid}", r.c_dd);
    }
}

#[test]
fn constants_are_ordered() {
    for ch in [NoiseChannel::bsc(0.01).unwrap(), NoiseChannel::bsc(0.1).unwrap(), NoiseChannel::z(0.5).unwrap()] {
        let sh = shannon_constant(&ch);
        for theta in [0.1, 0.5, 0.9] {
            let ex = c_exact(theta, &ch).c_ex;
            let dd = c_dd(theta, &ch).unwrap().c_dd;
            assert!(sh <= ex * (1.0 + 1e-9), "{ch} θ {theta}: c_sh {sh} > c_ex {ex}");
            assert!(ex <= dd * (1.0 + 1e-6), "{ch} θ {theta}: c_ex {ex} > c_dd {dd}");
        }
    }
}
