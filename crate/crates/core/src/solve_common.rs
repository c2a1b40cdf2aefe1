//! Shared machinery of the two-parameter solvers: the error type and the
//! inner extremum search (coarse scan of the derivative's sign, then
//! bisection; golden-section fallback when the derivative is kinky).

use crate::fluct::FluctError;
use crate::mc::McError;
use crate::num::quad::QuadError;
use crate::num::roots;
use crate::scale::ScaleError;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("bracketing failed for {what}; curve samples (arg, value): {samples:?}")]
    Bracket { what: String, samples: Vec<(f64, f64)> },
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Fluct(#[from] FluctError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Mc(#[from] McError),
}

#[derive(Debug, Clone, Copy)]
pub struct InnerExtremum {
    pub arg: f64,
    pub val: f64,
    /// True when the extremum sits strictly inside the search window (the
    /// derivative changed sign there).
    pub interior: bool,
    /// Derivative value at `arg` (zero residual for interior extrema).
    pub deriv: f64,
}

/// Extremum of `objective` over `(lo, hi]` where `deriv` is its partial
/// derivative: scans 64 cells for the sign pattern (- to + when minimizing,
/// + to - when maximizing), bisects each crossing, and compares against the
/// endpoints. Falls back to golden-section around the best scan sample when
/// the derivative shows no usable sign change but the samples dip.
pub fn inner_extremum(
    deriv: &dyn Fn(f64) -> f64,
    objective: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    minimize: bool,
) -> InnerExtremum {
    let sgn = if minimize { 1.0 } else { -1.0 };
    let n = 64;
    let h = (hi - lo) / n as f64;
    let mut candidates: Vec<f64> = Vec::new();
    let mut prev_x = lo + 1e-12 * h;
    let mut prev_d = sgn * deriv(prev_x);
    let mut obj_samples: Vec<(f64, f64)> = Vec::new();
    for i in 1..=n {
        let x = lo + i as f64 * h;
        let d = sgn * deriv(x);
        if prev_d < 0.0 && d >= 0.0 {
            candidates.push(roots::bisect(&|t| sgn * deriv(t), prev_x, x, 1e-15));
        }
        if i % 8 == 0 {
            obj_samples.push((x, sgn * objective(x)));
        }
        prev_x = x;
        prev_d = d;
    }

    let mut best = InnerExtremum { arg: lo, val: objective(lo), interior: false, deriv: deriv(lo + 1e-12 * h) };
    let hi_val = objective(hi);
    if sgn * hi_val < sgn * best.val {
        best = InnerExtremum { arg: hi, val: hi_val, interior: false, deriv: deriv(hi) };
    }
    for c in candidates {
        let v = objective(c);
        if sgn * v < sgn * best.val {
            best = InnerExtremum { arg: c, val: v, interior: true, deriv: deriv(c) };
        }
    }
    if !best.interior {
        // Derivative gave nothing; check whether the samples dip below the
        // endpoints and refine by golden section if so.
        if let Some(&(xs, vs)) = obj_samples
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        {
            if vs < sgn * best.val - 1e-14 * best.val.abs().max(1.0) {
                let (xm, vm) = roots::golden_min(
                    &|x| sgn * objective(x),
                    (xs - 8.0 * h).max(lo),
                    (xs + 8.0 * h).min(hi),
                    1e-12 * hi.abs().max(1.0),
                );
                best = InnerExtremum { arg: xm, val: sgn * vm, interior: true, deriv: deriv(xm) };
            }
        }
    }
    best
}
