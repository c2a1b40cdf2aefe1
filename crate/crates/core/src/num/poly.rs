//! Piecewise polynomials with explicit breakpoints.
//!
//! Running costs are represented this way so every quadrature can split
//! exactly at the kinks, and so exponentially weighted tail integrals
//! (the Psi transform) have closed forms.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, thiserror::Error)]
pub enum PolyError {
    #[error("breakpoints must be strictly increasing")]
    UnsortedBreaks,
    #[error("need breakpoints.len()+1 pieces, got {pieces} pieces for {breaks} breakpoints")]
    PieceCount { pieces: usize, breaks: usize },
    #[error("piecewise polynomial is discontinuous at x = {at} (jump {jump:.3e})")]
    Discontinuous { at: f64, jump: f64 },
}

/// Polynomial pieces in the global variable: piece `i` applies on
/// `[breaks[i-1], breaks[i])` (right-continuous), with open ends outside.
/// Coefficients are low-to-high degree.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &ci in c.iter().rev() {
        acc = acc * x + ci;
    }
    acc
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect()
}

impl PiecewisePoly {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self, PolyError> {
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PolyError::UnsortedBreaks);
        }
        if pieces.len() != breaks.len() + 1 {
            return Err(PolyError::PieceCount { pieces: pieces.len(), breaks: breaks.len() });
        }
        let p = Self { breaks, pieces };
        // Running costs are continuous by assumption; reject accidental jumps.
        for (i, &t) in p.breaks.iter().enumerate() {
            let l = poly_eval(&p.pieces[i], t);
            let r = poly_eval(&p.pieces[i + 1], t);
            let jump = (l - r).abs();
            if jump > 1e-9 * l.abs().max(r.abs()).max(1.0) {
                return Err(PolyError::Discontinuous { at: t, jump });
            }
        }
        Ok(p)
    }

    pub fn constant(c: f64) -> Self {
        Self { breaks: vec![], pieces: vec![vec![c]] }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { breaks: vec![], pieces: vec![coeffs] }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.iter().all(|&c| c == 0.0))
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn piece_index(&self, x: f64, side: Side) -> usize {
        match side {
            Side::Right => self.breaks.partition_point(|&t| t <= x),
            Side::Left => self.breaks.partition_point(|&t| t < x),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        poly_eval(&self.pieces[self.piece_index(x, Side::Right)], x)
    }

    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        poly_eval(&self.pieces[self.piece_index(x, side)], x)
    }

    /// One-sided derivative (right unless `side` says otherwise).
    pub fn deriv(&self, x: f64, side: Side) -> f64 {
        let idx = self.piece_index(x, side);
        poly_eval(&poly_deriv(&self.pieces[idx]), x)
    }

    /// Piecewise derivative (kinks become jumps; same breakpoints).
    pub fn derivative(&self) -> PiecewisePoly {
        PiecewisePoly {
            breaks: self.breaks.clone(),
            pieces: self.pieces.iter().map(|p| poly_deriv(p)).collect(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Convexity check: nonnegative second derivative inside every piece
    /// (sampled) and nondecreasing one-sided slopes across breakpoints.
    pub fn is_convex(&self) -> bool {
        let lo = self.breaks.first().copied().unwrap_or(0.0) - 10.0;
        let hi = self.breaks.last().copied().unwrap_or(0.0) + 10.0;
        let edges: Vec<f64> = std::iter::once(lo)
            .chain(self.breaks.iter().copied())
            .chain(std::iter::once(hi))
            .collect();
        for (i, w) in edges.windows(2).enumerate() {
            let d2 = poly_deriv(&poly_deriv(&self.pieces[i]));
            for k in 0..=32 {
                let x = w[0] + (w[1] - w[0]) * k as f64 / 32.0;
                if poly_eval(&d2, x) < -1e-12 {
                    return false;
                }
            }
        }
        for &t in &self.breaks {
            if self.deriv(t, Side::Right) < self.deriv(t, Side::Left) - 1e-12 {
                return false;
            }
        }
        true
    }

    /// Add `a0 + a1 * x` to every piece (slope changes of running costs).
    pub fn plus_affine(&self, a0: f64, a1: f64) -> PiecewisePoly {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut c = p.clone();
                while c.len() < 2 {
                    c.push(0.0);
                }
                c[0] += a0;
                c[1] += a1;
                c
            })
            .collect();
        PiecewisePoly { breaks: self.breaks.clone(), pieces }
    }

    /// Closed form of `int_0^inf exp(-rate*u) p(x+u) du` for `rate > 0`.
    pub fn exp_tail_integral(&self, rate: f64, x: f64) -> f64 {
        assert!(rate > 0.0, "exp_tail_integral needs a positive rate");
        // Segment the u-axis at breakpoints above x.
        let mut edges: Vec<f64> = vec![0.0];
        for &t in &self.breaks {
            if t > x {
                edges.push(t - x);
            }
        }
        let mut total = 0.0;
        for (k, &u0) in edges.iter().enumerate() {
            let u1 = edges.get(k + 1).copied();
            // Pick the piece valid on (x+u0, x+u1).
            let probe = match u1 {
                Some(u1) => x + 0.5 * (u0 + u1),
                None => x + u0 + 1.0,
            };
            let coeffs = &self.pieces[self.piece_index(probe, Side::Right)];
            total += exp_poly_integral(coeffs, x, rate, u0, u1);
        }
        total
    }
}

/// `int_{u0}^{u1} exp(-rate*u) p(x+u) du` with `u1 = None` meaning infinity.
fn exp_poly_integral(coeffs: &[f64], x: f64, rate: f64, u0: f64, u1: Option<f64>) -> f64 {
    // Taylor-shift p(x+u) into powers of u: d_m = sum_{i>=m} C(i,m) c_i x^{i-m}.
    let n = coeffs.len();
    let mut d = vec![0.0_f64; n];
    for m in 0..n {
        let mut binom = 1.0_f64; // C(m, m)
        let mut xpow = 1.0_f64;
        for i in m..n {
            d[m] += binom * coeffs[i] * xpow;
            binom *= (i + 1) as f64 / (i + 1 - m) as f64;
            xpow *= x;
        }
    }
    // I_m = int u^m e^{-rate u} du over [u0, u1]; recursion in m.
    let e0 = (-rate * u0).exp();
    let (e1, u1v) = match u1 {
        Some(u1) => ((-rate * u1).exp(), u1),
        None => (0.0, 0.0),
    };
    let mut im = (e0 - e1) / rate;
    let mut total = d[0] * im;
    let mut p0 = 1.0; // u0^m
    let mut p1 = 1.0; // u1^m
    for m in 1..n {
        p0 *= u0;
        p1 *= u1v;
        im = (p0 * e0 - p1 * e1) / rate + m as f64 * im / rate;
        total += d[m] * im;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_sides() {
        // |x| as two pieces split at 0
        let p = PiecewisePoly::new(vec![0.0], vec![vec![0.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.eval(-2.0), 2.0);
        assert_eq!(p.eval(3.0), 3.0);
        assert_eq!(p.deriv(0.0, Side::Right), 1.0);
        assert_eq!(p.deriv(0.0, Side::Left), -1.0);
        assert!(p.is_convex());
    }

    #[test]
    fn rejects_discontinuity() {
        let r = PiecewisePoly::new(vec![0.0], vec![vec![0.0], vec![1.0]]);
        assert!(r.is_err());
    }

    #[test]
    fn quadratic_not_convex_when_negated() {
        let p = PiecewisePoly::from_coeffs(vec![0.0, 0.0, -1.0]);
        assert!(!p.is_convex());
    }

    #[test]
    fn exp_tail_integral_against_gamma_moments() {
        // p(y) = y^2, x = 0, rate = 1: integral = Gamma(3) = 2.
        let p = PiecewisePoly::from_coeffs(vec![0.0, 0.0, 1.0]);
        assert!((p.exp_tail_integral(1.0, 0.0) - 2.0).abs() < 1e-12);
        // Shifted: int e^{-u} (1+u)^2 du = 1 + 2 + 2 = 5.
        assert!((p.exp_tail_integral(1.0, 1.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn exp_tail_integral_with_breakpoint() {
        // p(y) = max(y, 0): pieces 0 and y split at 0. With x = -1, rate = 1:
        // int_0^inf e^{-u} max(u-1, 0) du = e^{-1}.
        let p = PiecewisePoly::new(vec![0.0], vec![vec![0.0], vec![0.0, 1.0]]).unwrap();
        let v = p.exp_tail_integral(1.0, -1.0);
        assert!((v - (-1.0_f64).exp()).abs() < 1e-12, "got {v}");
    }
}
