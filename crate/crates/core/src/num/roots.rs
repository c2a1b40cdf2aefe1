//! Bracketing root finders and 1-d minimization.

/// Bisection on a sign change. `lo` and `hi` must bracket a root
/// (f(lo) and f(hi) of opposite sign); converges to relative x-tolerance.
pub fn bisect(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    let mut lo = lo;
    let mut hi = hi;
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo * fhi < 0.0, "bisect requires a sign change");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs().max(1.0) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection followed by Newton polish when a derivative is supplied.
pub fn bisect_newton(
    f: &dyn Fn(f64) -> f64,
    df: Option<&dyn Fn(f64) -> f64>,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> f64 {
    let mut x = bisect(f, lo, hi, (rel_tol * 1e3).max(1e-9));
    if let Some(df) = df {
        for _ in 0..8 {
            let fx = f(x);
            let d = df(x);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let step = fx / d;
            let next = x - step;
            if !next.is_finite() || next < lo || next > hi {
                break;
            }
            x = next;
            if step.abs() <= rel_tol * x.abs().max(1.0) {
                break;
            }
        }
    } else {
        x = bisect(f, lo, hi, rel_tol);
    }
    x
}

/// Expand `hi` upward (doubling from `start`) until `pred(hi)` holds.
/// Returns None if not reached within `max_doublings`.
pub fn expand_until(pred: &dyn Fn(f64) -> bool, start: f64, max_doublings: u32) -> Option<f64> {
    let mut x = start;
    for _ in 0..max_doublings {
        if pred(x) {
            return Some(x);
        }
        x *= 2.0;
    }
    None
}

/// Scan `[lo, hi]` on `n` equal cells and return all sign-change brackets.
pub fn sign_changes(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let h = (hi - lo) / n as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = lo + i as f64 * h;
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push((x0, x0));
        } else if f0 * f1 < 0.0 {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Golden-section minimization on `[a, b]`; returns (argmin, min).
pub fn golden_min(f: &dyn Fn(f64) -> f64, a: f64, b: f64, x_tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut a = a;
    let mut b = b;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f(xm))
}
