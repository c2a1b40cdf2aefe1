//! The q-scale function family W, Z, their antiderivatives, and the
//! auxiliary transforms phi_s(x; h) and Psi(s; h).
//!
//! Two backends:
//! - `PartialFraction` for rational Laplace exponents (hyperexponential
//!   jumps): all roots of psi(s) = q are located between the poles and the
//!   scale function is an explicit exponential sum.
//! - `LaplaceInversion`: W is represented as the dominant exponential minus
//!   a bounded resolvent term, and only the resolvent term is inverted
//!   numerically (fixed Talbot for rational models, Gaver-Stehfest when the
//!   exponent is only evaluable on the real axis).

use num_complex::Complex64;

use crate::model::{LevyModel, VariationClass};
use crate::num::laplace::{gaver_stehfest, talbot};
use crate::num::poly::{PiecewisePoly, Side};
use crate::num::quad::{self, QuadError, QuadOpts};
use crate::num::roots;
use crate::tol;

pub use crate::num::poly::Side as DerivSide;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    PartialFraction,
    LaplaceInversion,
}

#[derive(Debug, thiserror::Error)]
pub enum ScaleError {
    #[error("q must be positive, got {0}")]
    NonPositiveQ(f64),
    #[error("partial-fraction backend requires a rational Laplace exponent (hyperexponential jumps only)")]
    NeedsRational,
    #[error("degenerate (near-double) root of psi(s) = q at s = {at}: |psi'(root)| = {slope:.3e}")]
    DegenerateRoot { at: f64, slope: f64 },
    #[error("R requires a finite jump mean (psi'(0+) = -infinity)")]
    InfiniteMean,
    #[error("W'' unavailable: insufficient smoothness for this model/backend")]
    NoSecondDerivative,
    #[error("Psi(s; h) diverges: growth bound {growth} >= Phi(q) = {phi_q}")]
    PsiDiverges { growth: f64, phi_q: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone)]
struct PfData {
    /// All roots of psi(s) = q, the positive root Phi(q) first.
    roots: Vec<f64>,
    /// Residue weights 1/psi'(r_k).
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InvMethod {
    Talbot,
    GaverStehfest,
}

#[derive(Debug, Clone)]
struct InvData {
    method: InvMethod,
    /// r(0+) = 1/psi'(Phi(q)) - W(0); the resolvent term at zero.
    r_zero: f64,
}

#[derive(Debug, Clone)]
enum FamilyKind {
    Pf(PfData),
    Inv(InvData),
}

/// Scale-function family for a fixed model and discount rate q > 0.
/// Immutable after build; evaluations are pure.
#[derive(Debug, Clone)]
pub struct ScaleFamily {
    model: LevyModel,
    q: f64,
    phi_q: f64,
    psi_prime_phi: f64,
    w0: f64,
    wp0: f64,
    kind: FamilyKind,
}

const TALBOT_NODES: usize = 32;
const STEHFEST_TERMS: usize = 16;

impl ScaleFamily {
    pub fn build(model: LevyModel, q: f64, backend: Backend) -> Result<Self, ScaleError> {
        if q <= 0.0 {
            return Err(ScaleError::NonPositiveQ(q));
        }
        let phi_q = model.phi(q);
        let psi_prime_phi = model.psi_derivative(phi_q, 1);

        let w0 = match model.variation_class() {
            VariationClass::Unbounded => 0.0,
            VariationClass::Bounded => 1.0 / model.delta().expect("bounded variation has delta"),
        };
        let wp0 = analytic_wp0(&model, q);

        let kind = match backend {
            Backend::PartialFraction => {
                if !model.is_rational() {
                    return Err(ScaleError::NeedsRational);
                }
                FamilyKind::Pf(build_partial_fraction(&model, q, phi_q)?)
            }
            Backend::LaplaceInversion => {
                let method = if model.is_rational() {
                    InvMethod::Talbot
                } else {
                    InvMethod::GaverStehfest
                };
                FamilyKind::Inv(InvData { method, r_zero: 1.0 / psi_prime_phi - w0 })
            }
        };

        Ok(Self { model, q, phi_q, psi_prime_phi, w0, wp0, kind })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }

    pub fn psi_prime_phi(&self) -> f64 {
        self.psi_prime_phi
    }

    pub fn backend(&self) -> Backend {
        match self.kind {
            FamilyKind::Pf(_) => Backend::PartialFraction,
            FamilyKind::Inv(_) => Backend::LaplaceInversion,
        }
    }

    /// W(0) per the variation class.
    pub fn w_at_zero(&self) -> f64 {
        self.w0
    }

    /// W'(0+); infinite for sigma = 0 with infinite-activity jumps.
    pub fn w_prime_at_zero(&self) -> f64 {
        self.wp0
    }

    // ---- the scale family -------------------------------------------------

    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return self.w0;
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights) {
                    acc += wk * (r * x).exp();
                }
                acc
            }
            FamilyKind::Inv(inv) => {
                (self.phi_q * x).exp() / self.psi_prime_phi - self.invert_resolvent(inv, 0, x)
            }
        }
    }

    pub fn w_prime(&self, x: f64, side: Side) -> f64 {
        if x < 0.0 || (x == 0.0 && side == Side::Left) {
            return 0.0;
        }
        if x == 0.0 {
            return self.wp0;
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights) {
                    acc += wk * r * (r * x).exp();
                }
                acc
            }
            FamilyKind::Inv(inv) => {
                // Transform of r'(x) is s*Rhat(s) - r(0+).
                let small = 1e-3 / self.phi_q.max(1.0);
                if x < small {
                    // Linear extrapolation from two interior points.
                    let x1 = small;
                    let x2 = 2.0 * small;
                    let w1 = self.w_prime(x1, Side::Right);
                    let w2 = self.w_prime(x2, Side::Right);
                    return w1 + (w2 - w1) * (x - x1) / (x2 - x1);
                }
                let lead = self.phi_q * (self.phi_q * x).exp() / self.psi_prime_phi;
                lead - self.invert_resolvent(inv, -1, x)
            }
        }
    }

    pub fn w_second(&self, x: f64) -> Result<f64, ScaleError> {
        if self.model.sigma() == 0.0 && !self.model.is_rational() {
            return Err(ScaleError::NoSecondDerivative);
        }
        if x < 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights) {
                    acc += wk * r * r * (r * x).exp();
                }
                Ok(acc)
            }
            FamilyKind::Inv(_) => {
                // Second difference of W with a wide step: the inversion noise
                // floor (~1e-10 relative) is amplified by 1/h^2.
                let h = 1e-2 * x.abs().max(1.0 / self.phi_q.max(1.0));
                let f = |t: f64| self.w(t);
                let x0 = x.max(2.0 * h + 1e-9);
                Ok(crate::num::fd::deriv2(&f, x0, h))
            }
        }
    }

    /// Antiderivative of W from 0.
    pub fn wbar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights) {
                    acc += wk * expm1_over(r * x) * x;
                }
                acc
            }
            FamilyKind::Inv(inv) => {
                let lead = expm1_over(self.phi_q * x) * x / self.psi_prime_phi;
                lead - self.invert_resolvent(inv, 1, x)
            }
        }
    }

    pub fn z(&self, x: f64) -> f64 {
        1.0 + self.q * self.wbar(x)
    }

    /// Antiderivative of Z from 0; equals x below zero.
    pub fn zbar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return x;
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights) {
                    acc += wk * expm1m_over2(r * x) * x * x;
                }
                x + self.q * acc
            }
            FamilyKind::Inv(inv) => {
                let lead = expm1m_over2(self.phi_q * x) * x * x / self.psi_prime_phi;
                x + self.q * (lead - self.invert_resolvent(inv, 2, x))
            }
        }
    }

    /// R(x) = Zbar(x) + psi'(0+)/q; requires a finite jump mean.
    pub fn r_big(&self, x: f64) -> Result<f64, ScaleError> {
        let m = self.model.psi_prime_zero();
        if m == f64::NEG_INFINITY {
            return Err(ScaleError::InfiniteMean);
        }
        Ok(self.zbar(x) + m / self.q)
    }

    /// Theta(y) = W'(y+) - Phi(q) W(y), positive on (0, inf).
    ///
    /// The leading exponentials cancel exactly, so this is computed in a
    /// cancellation-free form (the naive difference is O(eps * e^{Phi x})
    /// noise for large arguments).
    pub fn theta(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        if y == 0.0 {
            return self.wp0 - self.phi_q * self.w0;
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights).skip(1) {
                    acc += wk * (r - self.phi_q) * (r * y).exp();
                }
                acc
            }
            FamilyKind::Inv(inv) => {
                // Theta = Phi r(x) - r'(x).
                self.phi_q * self.invert_resolvent(inv, 0, y) - self.invert_resolvent(inv, -1, y)
            }
        }
    }

    /// Thetabar(x) = W(x) - Phi(q) Wbar(x), the antiderivative of Theta
    /// (plus the atom W(0) at zero); cancellation-free like `theta`.
    pub fn thetabar(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return self.w0;
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = self.phi_q / self.q;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights).skip(1) {
                    acc += wk * (1.0 - self.phi_q / r) * (r * x).exp();
                }
                acc
            }
            FamilyKind::Inv(inv) => {
                1.0 / self.psi_prime_phi - self.invert_resolvent(inv, 0, x)
                    + self.phi_q * self.invert_resolvent(inv, 1, x)
            }
        }
    }

    /// zeta(x) = Z(x) - (q/Phi(q)) W(x) = E_x[e^{-q T_0^-}];
    /// cancellation-free (bounded, decays to zero).
    pub fn zeta(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights).skip(1) {
                    acc += self.q * wk * (1.0 / r - 1.0 / self.phi_q) * (r * x).exp();
                }
                acc
            }
            FamilyKind::Inv(inv) => {
                1.0 - self.q / (self.phi_q * self.psi_prime_phi)
                    - self.q * self.invert_resolvent(inv, 1, x)
                    + self.q / self.phi_q * self.invert_resolvent(inv, 0, x)
            }
        }
    }

    /// Exponential-sum representation of W or Z on [0, inf) under the
    /// partial-fraction backend: returns (roots, coefficients) with
    /// `g(t) = sum_k c_k e^{r_k t}` (W: c_k = w_k; Z: c_k = q w_k / r_k,
    /// whose constant parts telescope away since sum w_k / r_k = 1/q).
    ///
    /// Panics on the inversion backend; callers check `backend()` first.
    pub fn pf_exponential_sum(&self, z_not_w: bool) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let coefs = pf
                    .roots
                    .iter()
                    .zip(&pf.weights)
                    .map(|(&r, &wk)| if z_not_w { self.q * wk / r } else { wk })
                    .collect();
                (pf.roots.clone(), coefs)
            }
            FamilyKind::Inv(_) => panic!("pf_exponential_sum requires the partial-fraction backend"),
        }
    }

    /// The bounded resolvent term r(x) = e^{Phi(q) x}/psi'(Phi(q)) - W(x).
    pub fn resolvent_term(&self, x: f64) -> f64 {
        match &self.kind {
            FamilyKind::Pf(pf) => {
                let mut acc = 0.0;
                for (&r, &wk) in pf.roots.iter().zip(&pf.weights) {
                    if r != self.phi_q {
                        acc -= wk * (r * x).exp();
                    }
                }
                acc
            }
            FamilyKind::Inv(inv) => self.invert_resolvent(inv, 0, x.max(1e-12)),
        }
    }

    // ---- integral transforms ---------------------------------------------

    /// phi_s(x; h) = int_s^x W(x-y) h(y) dy; zero for x <= s.
    pub fn phi_integral(
        &self,
        s: f64,
        x: f64,
        h: &dyn Fn(f64) -> f64,
        h_breaks: &[f64],
    ) -> Result<f64, ScaleError> {
        if x <= s {
            return Ok(0.0);
        }
        let f = |y: f64| self.w(x - y) * h(y);
        Ok(quad::integrate_strict(&f, s, x, h_breaks, QuadOpts::default())?)
    }

    /// Best-effort phi_s(x; h) for piecewise polynomials (evaluator paths).
    pub fn phi_integral_poly(&self, s: f64, x: f64, h: &PiecewisePoly) -> f64 {
        if x <= s {
            return 0.0;
        }
        let f = |y: f64| self.w(x - y) * h.eval(y);
        quad::integrate_best(&f, s, x, h.breaks())
    }

    /// Psi(s; h) = int_0^inf e^{-Phi(q) y} h(y+s) dy, truncated where the
    /// exponential tail is below `TAIL_EPS`. `growth` is an exponential
    /// growth bound on h and must stay below Phi(q).
    pub fn psi_integral(
        &self,
        s: f64,
        h: &dyn Fn(f64) -> f64,
        h_breaks: &[f64],
        growth: f64,
    ) -> Result<f64, ScaleError> {
        if growth >= self.phi_q {
            return Err(ScaleError::PsiDiverges { growth, phi_q: self.phi_q });
        }
        let y_star = (1.0 / tol::TAIL_EPS).ln() / (self.phi_q - growth.max(0.0));
        let f = |y: f64| (-self.phi_q * y).exp() * h(y + s);
        let h_cuts: Vec<f64> = h_breaks.iter().map(|&t| t - s).filter(|&t| t > 0.0).collect();
        // Integrate decade-by-decade of the exponential weight. The absolute
        // floor is tied to a global scan of the integrand scale: Psi is often
        // multiplied by W(x - s), which amplifies any fixed absolute floor,
        // while a purely relative budget stalls in subnormal tail decades.
        let scan_scale = |lo: f64, hi: f64| -> f64 {
            let mut m = 0.0_f64;
            for i in 0..128 {
                let y = lo + (hi - lo) * (i as f64 + 0.5) / 128.0;
                m = m.max(f(y).abs());
            }
            m * (hi - lo)
        };
        let mut mass_scale = scan_scale(0.0, y_star);
        let decade = std::f64::consts::LN_10 / self.phi_q;
        let segment = |lo: f64, hi: f64, mass_scale: f64| -> Result<f64, ScaleError> {
            let opts = QuadOpts {
                abs_tol: (1e-14 * mass_scale).max(f64::MIN_POSITIVE),
                ..QuadOpts::default()
            };
            let mut acc = 0.0;
            let mut a = lo;
            while a < hi {
                let b = (a + decade).min(hi);
                let seg: Vec<f64> = h_cuts.iter().copied().filter(|&t| t > a && t < b).collect();
                acc += quad::integrate_strict(&f, a, b, &seg, opts)?;
                a = b;
            }
            Ok(acc)
        };
        let mut acc = segment(0.0, y_star, mass_scale)?;
        // Extend past the nominal truncation while chunks still contribute
        // (guards deep negative shifts where the mass sits far out).
        let mut lo = y_star;
        for _ in 0..8 {
            let hi = 2.0 * lo;
            mass_scale = mass_scale.max(scan_scale(lo, hi)).max(acc.abs());
            let inc = segment(lo, hi, mass_scale)?;
            acc += inc;
            if inc.abs() <= tol::TAIL_EPS * acc.abs() && acc != 0.0 {
                break;
            }
            lo = hi;
        }
        Ok(acc)
    }

    /// Closed-form Psi(s; p) for piecewise polynomials.
    pub fn psi_integral_poly(&self, s: f64, p: &PiecewisePoly) -> f64 {
        p.exp_tail_integral(self.phi_q, s)
    }

    // ---- internals ---------------------------------------------------------

    /// Invert the resolvent transform divided by s^power (power in -1..=2);
    /// power -1 means the derivative transform s*Rhat(s) - r(0+).
    fn invert_resolvent(&self, inv: &InvData, power: i32, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        match inv.method {
            InvMethod::Talbot => {
                let f = |s: Complex64| {
                    let rhat = self.rhat_complex(s);
                    match power {
                        -1 => s * rhat - inv.r_zero,
                        0 => rhat,
                        1 => rhat / s,
                        _ => rhat / (s * s),
                    }
                };
                talbot(&f, x, TALBOT_NODES)
            }
            InvMethod::GaverStehfest => {
                let f = |s: f64| {
                    let rhat = self.rhat_real(s);
                    match power {
                        -1 => s * rhat - inv.r_zero,
                        0 => rhat,
                        1 => rhat / s,
                        _ => rhat / (s * s),
                    }
                };
                gaver_stehfest(&f, x, STEHFEST_TERMS)
            }
        }
    }

    /// Rhat(s) = 1/(psi'(Phi)(s - Phi)) - 1/(psi(s) - q), analytic at Phi.
    fn rhat_complex(&self, s: Complex64) -> Complex64 {
        let delta = s - self.phi_q;
        if delta.norm() < 1e-6 * self.phi_q.max(1.0) {
            // Series around the removable singularity.
            let p1 = self.psi_prime_phi;
            let p2 = self.model.psi_derivative(self.phi_q, 2);
            let p3 = psi_third_rational(&self.model, self.phi_q);
            let c0 = p2 / (2.0 * p1 * p1);
            let c1 = p3 / (6.0 * p1 * p1) - p2 * p2 / (4.0 * p1 * p1 * p1);
            return Complex64::new(c0, 0.0) + delta * c1;
        }
        (delta * self.psi_prime_phi).inv() - (self.model.psi_complex(s) - self.q).inv()
    }

    fn rhat_real(&self, s: f64) -> f64 {
        let delta = s - self.phi_q;
        if delta.abs() < 1e-7 * self.phi_q.max(1.0) {
            let p1 = self.psi_prime_phi;
            let p2 = self.model.psi_derivative(self.phi_q, 2);
            return p2 / (2.0 * p1 * p1);
        }
        1.0 / (delta * self.psi_prime_phi) - 1.0 / (self.model.psi(s) - self.q)
    }
}

fn psi_third_rational(model: &LevyModel, s: f64) -> f64 {
    let mut v = 0.0;
    for t in &model.jumps().terms {
        let d = t.decay + s;
        v -= 6.0 * t.rate * t.decay / (d * d * d * d);
    }
    v
}

/// (e^t - 1)/t, stable near zero; caller multiplies by x so that
/// `expm1_over(r*x) * x = (e^{r x} - 1)/r`.
fn expm1_over(t: f64) -> f64 {
    if t.abs() < 1e-5 {
        1.0 + 0.5 * t + t * t / 6.0
    } else {
        t.exp_m1() / t
    }
}

/// (e^t - 1 - t)/t^2, stable near zero; `expm1m_over2(r x) * x^2 =
/// (e^{r x} - 1 - r x)/r^2`.
fn expm1m_over2(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        0.5 + t / 6.0 + t * t / 24.0
    } else {
        (t.exp_m1() - t) / (t * t)
    }
}

/// W'(0+) by the variation/activity trichotomy.
fn analytic_wp0(model: &LevyModel, q: f64) -> f64 {
    if model.sigma() > 0.0 {
        return 2.0 / (model.sigma() * model.sigma());
    }
    match model.variation_class() {
        VariationClass::Unbounded => f64::INFINITY,
        VariationClass::Bounded => {
            // Finite activity needed for a finite limit.
            if model.jumps().general.is_some() {
                // Total mass of a general density may be infinite; treat as
                // infinite activity unless it is absent.
                f64::INFINITY
            } else {
                let delta = model.delta().unwrap();
                (q + model.jump_rate_total()) / (delta * delta)
            }
        }
    }
}

fn build_partial_fraction(model: &LevyModel, q: f64, phi_q: f64) -> Result<PfData, ScaleError> {
    let f = |s: f64| model.psi(s) - q;
    let mut roots_found = vec![phi_q];

    let mut decays: Vec<f64> = model.jumps().terms.iter().map(|t| t.decay).collect();
    decays.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = decays.len();

    // Approach a pole from one side until the sign flips to `want_positive`.
    let approach = |pole: f64, dir: f64, gap: f64, want_positive: bool| -> Option<f64> {
        let mut step = 0.45 * gap;
        for _ in 0..70 {
            let s = pole + dir * step;
            let v = f(s);
            if v.is_finite() && ((v > 0.0) == want_positive) {
                return Some(s);
            }
            step *= 0.5;
        }
        None
    };

    // One root in (-eta_1, 0): psi - q < 0 at 0-, +inf near the pole.
    if n > 0 {
        let gap = decays[0];
        if let Some(l) = approach(-decays[0], 1.0, gap, true) {
            roots_found.push(roots::bisect(&f, l, 0.0, tol::ROOT_REL_TOL));
        }
        // One root between consecutive poles.
        for i in 0..n - 1 {
            let gap = decays[i + 1] - decays[i];
            let l = approach(-decays[i + 1], 1.0, gap, true);
            let r = approach(-decays[i], -1.0, gap, false);
            if let (Some(l), Some(r)) = (l, r) {
                roots_found.push(roots::bisect(&f, l, r, tol::ROOT_REL_TOL));
            }
        }
    }
    // With a Gaussian part there is one more root below the deepest pole
    // (or anywhere on the negative axis when there are no jumps).
    if model.sigma() > 0.0 {
        let anchor = decays.last().copied().unwrap_or(0.0);
        let r = if n > 0 {
            approach(-anchor, -1.0, 1.0_f64.max(anchor), false)
        } else {
            Some(0.0)
        };
        if let Some(r) = r {
            let mut span = 1.0_f64.max(anchor);
            let mut l = -anchor - span;
            for _ in 0..200 {
                if f(l) > 0.0 {
                    break;
                }
                span *= 2.0;
                l = -anchor - span;
            }
            roots_found.push(roots::bisect(&f, l, r, tol::ROOT_REL_TOL));
        }
    }

    // Newton polish and residue weights.
    let mut weights = Vec::with_capacity(roots_found.len());
    for r in roots_found.iter_mut() {
        for _ in 0..4 {
            let slope = model.psi_derivative(*r, 1);
            if slope.abs() < tol::ROOT_DEGENERACY {
                break;
            }
            let step = f(*r) / slope;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
        let slope = model.psi_derivative(*r, 1);
        if slope.abs() < tol::ROOT_DEGENERACY {
            return Err(ScaleError::DegenerateRoot { at: *r, slope: slope.abs() });
        }
        weights.push(1.0 / slope);
    }
    Ok(PfData { roots: roots_found, weights })
}
