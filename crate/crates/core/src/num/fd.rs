//! Five-point finite-difference stencils.
//!
//! Step sizes balance truncation against roundoff: first derivatives use
//! O(1e-5) steps, second derivatives a larger O(1e-4) step because the
//! roundoff term grows like eps/h^2.

/// Base step for first derivatives, scaled by `max(1, |x|)`.
pub const H1_BASE: f64 = 1e-5;
/// Base step for second derivatives.
pub const H2_BASE: f64 = 2e-4;

pub fn deriv1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

pub fn deriv2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// One-sided five-point first derivative taking samples at x, x+h, .., x+4h
/// (pass negative h for a left stencil).
pub fn deriv1_one_sided(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-25.0 * f(x) + 48.0 * f(x + h) - 36.0 * f(x + 2.0 * h) + 16.0 * f(x + 3.0 * h)
        - 3.0 * f(x + 4.0 * h))
        / (12.0 * h)
}

/// One-sided second derivative, second order.
pub fn deriv2_one_sided(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (2.0 * f(x) - 5.0 * f(x + h) + 4.0 * f(x + 2.0 * h) - f(x + 3.0 * h)) / (h * h)
}

pub fn scaled_h1(x: f64) -> f64 {
    H1_BASE * x.abs().max(1.0)
}

pub fn scaled_h2(x: f64) -> f64 {
    H2_BASE * x.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_on_exp() {
        let f = |x: f64| x.exp();
        let x = 0.7;
        assert!((deriv1(&f, x, scaled_h1(x)) - x.exp()).abs() < 1e-10);
        assert!((deriv2(&f, x, scaled_h2(x)) - x.exp()).abs() < 1e-7);
        assert!((deriv1_one_sided(&f, x, 1e-3) - x.exp()).abs() < 1e-8);
        assert!((deriv1_one_sided(&f, x, -1e-3) - x.exp()).abs() < 1e-8);
        assert!((deriv2_one_sided(&f, x, 1e-3) - x.exp()).abs() < 1e-5);
    }
}
