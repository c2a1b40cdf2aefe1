//! Spectrally negative Levy process models and their analytic primitives:
//! the Laplace exponent, its derivatives, the right inverse Phi, and the
//! path-variation classification.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::num::{fd, quad, roots};
use crate::tol;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("jump term {index}: {what} must be positive")]
    NonPositiveJumpParam { index: usize, what: &'static str },
    #[error("jump decay rates must be pairwise distinct (terms {a} and {b})")]
    DuplicateDecay { a: usize, b: usize },
    #[error("model is the negative of a subordinator: sigma = 0 and adjusted drift delta = {delta} <= 0")]
    NegativeSubordinator { delta: f64 },
    #[error("delta-parameterization requires sigma = 0 (bounded variation)")]
    DeltaNeedsSigmaZero,
    #[error("operation requires a finite jump mean but psi'(0+) = -infinity")]
    InfiniteJumpMean,
}

/// One hyperexponential jump component: downward jumps arrive at `rate` and
/// have magnitude density `decay * exp(-decay * u)` on u > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpTerm {
    pub rate: f64,
    pub decay: f64,
}

/// User-supplied Levy density on (-inf, 0). The library does not try to
/// infer integrability from a function handle; the flags are declarations.
#[derive(Clone)]
pub struct GeneralDensity {
    pub density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Declares whether the jump part has finite variation.
    pub finite_variation: bool,
    /// Declares whether the jump part has a finite first moment.
    pub finite_mean: bool,
}

impl fmt::Debug for GeneralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralDensity")
            .field("finite_variation", &self.finite_variation)
            .field("finite_mean", &self.finite_mean)
            .finish()
    }
}

#[derive(Debug, Clone, Default)]
pub struct JumpSpec {
    pub terms: Vec<JumpTerm>,
    pub general: Option<GeneralDensity>,
}

impl JumpSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn hyperexponential(terms: Vec<JumpTerm>) -> Self {
        Self { terms, general: None }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.general.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationClass {
    Bounded,
    Unbounded,
}

/// Spectrally negative Levy process. Immutable after construction; all
/// evaluations are pure.
#[derive(Debug, Clone)]
pub struct LevyModel {
    gamma: f64,
    sigma: f64,
    jumps: JumpSpec,
    /// Linear drift of the finite-activity representation:
    /// `c = gamma - int_(-1,0) z nu(dz)` restricted to the hyperexponential
    /// part (equals delta when sigma = 0 and there is no general density).
    drift_fa: f64,
}

/// Compensator constant for one exponential component:
/// `int_0^1 u * decay * exp(-decay u) du`.
fn compensator(decay: f64) -> f64 {
    (1.0 - (-decay).exp()) / decay - (-decay).exp()
}

impl LevyModel {
    pub fn new(gamma: f64, sigma: f64, jumps: JumpSpec) -> Result<Self, ModelError> {
        for (i, t) in jumps.terms.iter().enumerate() {
            if t.rate <= 0.0 {
                return Err(ModelError::NonPositiveJumpParam { index: i, what: "rate" });
            }
            if t.decay <= 0.0 {
                return Err(ModelError::NonPositiveJumpParam { index: i, what: "decay" });
            }
        }
        for i in 0..jumps.terms.len() {
            for j in (i + 1)..jumps.terms.len() {
                if jumps.terms[i].decay == jumps.terms[j].decay {
                    return Err(ModelError::DuplicateDecay { a: i, b: j });
                }
            }
        }
        let drift_fa = gamma
            + jumps
                .terms
                .iter()
                .map(|t| t.rate * compensator(t.decay))
                .sum::<f64>();
        let m = Self { gamma, sigma, jumps, drift_fa };
        if m.variation_class() == VariationClass::Bounded {
            let delta = m.delta().unwrap();
            if delta <= 0.0 {
                return Err(ModelError::NegativeSubordinator { delta });
            }
        }
        Ok(m)
    }

    /// Bounded-variation parameterization via the adjusted drift delta.
    pub fn from_delta(delta: f64, jumps: JumpSpec) -> Result<Self, ModelError> {
        if let Some(g) = &jumps.general {
            if !g.finite_variation {
                return Err(ModelError::DeltaNeedsSigmaZero);
            }
        }
        let comp: f64 = jumps.terms.iter().map(|t| t.rate * compensator(t.decay)).sum();
        let gd = jumps
            .general
            .as_ref()
            .map(|g| {
                let f = g.density.clone();
                -quad::integrate_best(&move |z: f64| z * f(z), -1.0, 0.0, &[])
            })
            .unwrap_or(0.0);
        Self::new(delta - comp - gd, 0.0, jumps)
    }

    pub fn brownian(sigma: f64, gamma: f64) -> Self {
        Self::new(gamma, sigma, JumpSpec::none()).expect("brownian model is always valid")
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn jumps(&self) -> &JumpSpec {
        &self.jumps
    }

    /// Linear drift of the finite-activity decomposition (hyperexponential
    /// part only); the exact-in-law simulation drift.
    pub fn drift_fa(&self) -> f64 {
        self.drift_fa
    }

    pub fn is_rational(&self) -> bool {
        self.jumps.general.is_none()
    }

    pub fn variation_class(&self) -> VariationClass {
        if self.sigma != 0.0 {
            return VariationClass::Unbounded;
        }
        match &self.jumps.general {
            Some(g) if !g.finite_variation => VariationClass::Unbounded,
            _ => VariationClass::Bounded,
        }
    }

    /// Adjusted drift `delta = gamma - int_(-1,0) z nu(dz)` (bounded
    /// variation only).
    pub fn delta(&self) -> Option<f64> {
        if self.variation_class() != VariationClass::Bounded {
            return None;
        }
        let gd = self.jumps.general.as_ref().map(|g| {
            let f = g.density.clone();
            -quad::integrate_best(&move |z: f64| z * f(z), -1.0, 0.0, &[])
        });
        Some(self.drift_fa + gd.unwrap_or(0.0))
    }

    /// Total mass of the hyperexponential jump part.
    pub fn jump_rate_total(&self) -> f64 {
        self.jumps.terms.iter().map(|t| t.rate).sum()
    }

    /// Tail mass `nu(-inf, -x)` for x > 0.
    pub fn nu_bar(&self, x: f64) -> f64 {
        let hyper: f64 = self.jumps.terms.iter().map(|t| t.rate * (-t.decay * x).exp()).sum();
        let gen = self.jumps.general.as_ref().map(|g| {
            let f = &g.density;
            let mut total = 0.0;
            let mut a = x;
            loop {
                let b = 2.0 * a.max(1.0);
                let inc = quad::integrate_best(&|z: f64| f(-z), a, b, &[]);
                total += inc;
                if inc.abs() < 1e-13 * total.abs().max(1.0) || b > 1e9 {
                    break;
                }
                a = b;
            }
            total
        });
        hyper + gen.unwrap_or(0.0)
    }

    /// Levy density as a function of the jump magnitude u > 0.
    pub fn nu_density_mag(&self, u: f64) -> f64 {
        let hyper: f64 = self
            .jumps
            .terms
            .iter()
            .map(|t| t.rate * t.decay * (-t.decay * u).exp())
            .sum();
        hyper + self.jumps.general.as_ref().map(|g| (g.density)(-u)).unwrap_or(0.0)
    }

    /// Laplace exponent psi(s) for s >= 0.
    pub fn psi(&self, s: f64) -> f64 {
        let mut v = self.drift_fa * s + 0.5 * self.sigma * self.sigma * s * s;
        for t in &self.jumps.terms {
            v -= t.rate * s / (t.decay + s);
        }
        if let Some(g) = &self.jumps.general {
            v += general_psi_part(g, s);
        }
        v
    }

    /// Analytic continuation of psi for rational models.
    pub fn psi_complex(&self, s: Complex64) -> Complex64 {
        debug_assert!(self.is_rational());
        let mut v = s * self.drift_fa + s * s * (0.5 * self.sigma * self.sigma);
        for t in &self.jumps.terms {
            v -= s * t.rate / (s + t.decay);
        }
        v
    }

    pub fn psi_prime_complex(&self, s: Complex64) -> Complex64 {
        debug_assert!(self.is_rational());
        let mut v = Complex64::new(self.drift_fa, 0.0) + s * self.sigma * self.sigma;
        for t in &self.jumps.terms {
            let d = s + t.decay;
            v -= Complex64::new(t.rate * t.decay, 0.0) / (d * d);
        }
        v
    }

    /// First or second derivative of psi. Analytic for hyperexponential
    /// models, central finite difference for general densities.
    pub fn psi_derivative(&self, s: f64, order: u8) -> f64 {
        assert!(order == 1 || order == 2);
        if self.is_rational() {
            if order == 1 {
                let mut v = self.drift_fa + self.sigma * self.sigma * s;
                for t in &self.jumps.terms {
                    let d = t.decay + s;
                    v -= t.rate * t.decay / (d * d);
                }
                v
            } else {
                let mut v = self.sigma * self.sigma;
                for t in &self.jumps.terms {
                    let d = t.decay + s;
                    v += 2.0 * t.rate * t.decay / (d * d * d);
                }
                v
            }
        } else {
            let h = 1e-6 * s.abs().max(1.0);
            let f = |x: f64| self.psi(x.max(0.0));
            if order == 1 {
                if s < 2.0 * h {
                    fd::deriv1_one_sided(&f, s, h)
                } else {
                    fd::deriv1(&f, s, h)
                }
            } else if s < 2.0 * h {
                fd::deriv2_one_sided(&f, s, h)
            } else {
                fd::deriv2(&f, s, h)
            }
        }
    }

    /// `psi'(0+) = E X_1`; `-inf` when the jump measure has infinite mean.
    pub fn psi_prime_zero(&self) -> f64 {
        if let Some(g) = &self.jumps.general {
            if !g.finite_mean {
                return f64::NEG_INFINITY;
            }
        }
        self.psi_derivative(0.0, 1)
    }

    pub fn has_finite_mean(&self) -> bool {
        self.psi_prime_zero() > f64::NEG_INFINITY
    }

    /// Variance rate of X_1 (used by the Monte-Carlo moment checks).
    pub fn variance_rate(&self) -> f64 {
        self.psi_derivative(0.0, 2)
    }

    /// Right inverse of psi: the largest root of psi(s) = q, q > 0.
    pub fn phi(&self, q: f64) -> f64 {
        assert!(q > 0.0, "phi(q) requires q > 0");
        // psi is convex with psi(0) = 0, so bracket upward from 1.
        let hi = roots::expand_until(&|s| self.psi(s) > q, 1.0, 600).expect("psi grows without bound");
        let f = |s: f64| self.psi(s) - q;
        let root = if self.is_rational() {
            let df = |s: f64| self.psi_derivative(s, 1);
            roots::bisect_newton(&f, Some(&df), 0.0, hi, tol::ROOT_REL_TOL)
        } else {
            roots::bisect(&f, 0.0, hi, tol::ROOT_REL_TOL)
        };
        debug_assert!((self.psi(root) - q).abs() <= 1e-10 * q.max(1.0));
        root
    }
}

/// `int_(-inf,0) (e^{sz} - 1 - s z 1{z > -1}) g(z) dz` by quadrature, with
/// logarithmic refinement toward zero for infinite-activity densities.
fn general_psi_part(g: &GeneralDensity, s: f64) -> f64 {
    let f = g.density.clone();
    let integrand = move |z: f64| {
        let comp = if z > -1.0 { s * z } else { 0.0 };
        ((s * z).exp() - 1.0 - comp) * f(z)
    };
    let mut cuts = vec![-1.0];
    let mut e = 0.1;
    while e > 1e-12 {
        cuts.push(-e);
        e *= 0.1;
    }
    let mut total = quad::integrate_best(&integrand, -1.0, 0.0, &cuts);
    // Tail below -1, doubling until negligible.
    let mut a = 1.0;
    loop {
        let b = 2.0 * a;
        let inc = quad::integrate_best(&integrand, -b, -a, &[]);
        total += inc;
        if inc.abs() < 1e-13 * total.abs().max(1.0) || b > 1e6 {
            break;
        }
        a = b;
    }
    total
}
