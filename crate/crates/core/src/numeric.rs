//! Scalar root finding and one-dimensional minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Root of a continuous function with a sign change on `[lo, hi]`.
///
/// Returns the endpoint closest to zero if the signs agree.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    if flo.signum() == fhi.signum() {
        return if flo.abs() < fhi.abs() { lo } else { hi };
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Boundary of a monotone predicate: `pred(lo)` false, `pred(hi)` true.
/// Returns the smallest point (to `tol`) where the predicate holds.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(mut pred: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * hi.abs().max(1.0) || mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Like [`bisect_predicate`] on `(0, ∞)`, widening `hi` geometrically until
/// the predicate holds. Returns `None` if it never does below `cap`.
pub fn threshold_search<F: FnMut(f64) -> bool>(mut pred: F, start: f64, cap: f64, tol: f64) -> Option<f64> {
    let mut hi = start.max(tol);
    let mut lo = 0.0;
    while !pred(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return None;
        }
    }
    if lo == 0.0 {
        // shrink until the predicate fails so the bracket is tight
        let mut probe = hi;
        loop {
            let next = probe * 0.5;
            if next < tol {
                return Some(bisect_predicate(&mut pred, 0.0, probe, tol));
            }
            if !pred(next) {
                lo = next;
                hi = probe;
                break;
            }
            probe = next;
        }
    }
    Some(bisect_predicate(pred, lo, hi, tol))
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // the endpoints are never evaluated by the loop; include them so that
    // monotone functions return the boundary value
    let x = 0.5 * (a + b);
    let mut best = (x, f(x));
    for (xc, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (xc, fx);
        }
    }
    best
}

/// Minimize over `[a, b]` on a grid of `n` points and refine the best cell
/// by golden section. `log_spaced` uses a geometric grid (needs `a > 0`).
pub fn grid_golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, log_spaced: bool, tol: f64) -> (f64, f64) {
    let n = n.max(3);
    let pts: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log_spaced {
                (a.ln() + t * (b.ln() - a.ln())).exp()
            } else {
                a + t * (b - a)
            }
        })
        .collect();
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let mut bi = 0;
    for i in 1..n {
        if vals[i] < vals[bi] {
            bi = i;
        }
    }
    let lo = pts[bi.saturating_sub(1)];
    let hi = pts[(bi + 1).min(n - 1)];
    let (x, fx) = golden_min(&mut f, lo, hi, tol);
    if fx <= vals[bi] {
        (x, fx)
    } else {
        (pts[bi], vals[bi])
    }
}
