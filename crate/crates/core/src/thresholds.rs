//! Threshold levels from sign changes of a monotone function and of its
//! exponential forward average Psi(.; h), with the boundary clamping rules:
//! a function of constant sign maps to the matching end of the interval.

use crate::num::poly::{PiecewisePoly, Side};
use crate::num::roots;
use crate::scale::ScaleFamily;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Sign change located (negative below, positive above).
    At(f64),
    /// h > 0 on the whole interval: threshold clamps to the lower end.
    ClampedLower(f64),
    /// h < 0 on the whole interval: threshold clamps to the upper end.
    ClampedUpper(f64),
}

impl Threshold {
    pub fn value(&self) -> f64 {
        match *self {
            Threshold::At(x) | Threshold::ClampedLower(x) | Threshold::ClampedUpper(x) => x,
        }
    }

    pub fn is_interior(&self) -> bool {
        matches!(self, Threshold::At(_))
    }
}

/// Search width for sign changes on unbounded intervals.
const SEARCH_SPAN: f64 = 1e6;

/// Locate the sign change of a nondecreasing function on `interval`
/// (ends may be infinite).
pub fn sign_change(h: &dyn Fn(f64) -> f64, interval: (f64, f64)) -> Threshold {
    let (lo, hi) = interval;
    let lo_s = lo.max(-SEARCH_SPAN);
    let hi_s = hi.min(SEARCH_SPAN);
    // Expand geometrically from the middle until both signs are seen.
    let mid = if lo_s.is_finite() && hi_s.is_finite() { 0.5 * (lo_s + hi_s) } else { 0.0 };
    let mut neg_at = None;
    let mut pos_at = None;
    let mut span = 1.0_f64;
    for _ in 0..40 {
        let l = (mid - span).max(lo_s);
        let r = (mid + span).min(hi_s);
        if neg_at.is_none() && h(l) < 0.0 {
            neg_at = Some(l);
        }
        if pos_at.is_none() && h(r) > 0.0 {
            pos_at = Some(r);
        }
        if (neg_at.is_some() && pos_at.is_some()) || (l == lo_s && r == hi_s) {
            break;
        }
        span *= 2.0;
    }
    match (neg_at, pos_at) {
        (Some(l), Some(r)) => Threshold::At(roots::bisect(h, l, r, 1e-14)),
        (None, Some(_)) => Threshold::ClampedLower(lo),
        (Some(_), None) => Threshold::ClampedUpper(hi),
        (None, None) => {
            // h vanishes on the sampled range; report the midpoint.
            Threshold::At(mid)
        }
    }
}

/// `a_bar(h)`: sign-change point of the (right-continuous) derivative-like
/// function h given as a piecewise polynomial.
pub fn a_bar(h: &PiecewisePoly, interval: (f64, f64)) -> Threshold {
    sign_change(&|x| h.eval_side(x, Side::Right), interval)
}

/// `a_under(h)`: sign-change point of x -> Psi(x; h).
pub fn a_under(fam: &ScaleFamily, h: &PiecewisePoly, interval: (f64, f64)) -> Threshold {
    sign_change(&|x| fam.psi_integral_poly(x, h), interval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevyModel;
    use crate::scale::Backend;

    #[test]
    fn quadratic_bar_and_under() {
        // f(x) = x^2, C_U = 1, q = 0.5: f~' = 2x + 0.5, a_bar = -0.25.
        let h = PiecewisePoly::from_coeffs(vec![0.5, 2.0]);
        let t = a_bar(&h, (f64::NEG_INFINITY, f64::INFINITY));
        assert!(t.is_interior());
        assert!((t.value() + 0.25).abs() < 1e-12);

        // a_under solves 2x + C_U q + 2/Phi = 0 for BM (Phi = 1): x = -1.25.
        let fam = ScaleFamily::build(LevyModel::brownian(1.0, 0.0), 0.5, Backend::PartialFraction).unwrap();
        let t = a_under(&fam, &h, (f64::NEG_INFINITY, f64::INFINITY));
        assert!(t.is_interior());
        assert!((t.value() + 1.25).abs() < 1e-10, "{}", t.value());
        // ordering a_under < a_bar
        assert!(t.value() < -0.25);
    }

    #[test]
    fn constant_sign_clamps_to_interval_end() {
        // h = C_U q > 0 everywhere: a_bar clamps to the lower end.
        let h = PiecewisePoly::constant(0.25);
        match a_bar(&h, (0.0, f64::INFINITY)) {
            Threshold::ClampedLower(v) => assert_eq!(v, 0.0),
            other => panic!("expected lower clamp, got {other:?}"),
        }
        let h = PiecewisePoly::constant(-0.25);
        match a_bar(&h, (f64::NEG_INFINITY, 0.0)) {
            Threshold::ClampedUpper(v) => assert_eq!(v, 0.0),
            other => panic!("expected upper clamp, got {other:?}"),
        }
    }
}
