//! Central numerical tolerances.
//!
//! Solver precision and verification noise are kept separate: the fit
//! conditions are root-finding residuals (machine-level), while the
//! variational-inequality checks are dominated by quadrature and
//! finite-difference error.

/// Residual tolerance on the fit conditions Lambda = 0 and lambda = 0.
pub const TOL_FIT: f64 = 1e-8;

/// Tolerance on generator / variational-inequality checks.
pub const TOL_VI: f64 = 1e-5;

/// Absolute tolerance for adaptive quadrature.
pub const QUAD_ABS_TOL: f64 = 1e-10;

/// Relative tolerance for adaptive quadrature (binds on large integrals).
pub const QUAD_REL_TOL: f64 = 1e-13;

/// Maximum subdivision depth of the adaptive quadrature.
pub const QUAD_MAX_DEPTH: u32 = 40;

/// Relative x-tolerance for scalar root finding (bisection/Newton).
pub const ROOT_REL_TOL: f64 = 1e-12;

/// Roots of psi(s) = q closer than this to a double root are rejected.
pub const ROOT_DEGENERACY: f64 = 1e-10;

/// Truncation threshold for exponentially decaying tails
/// (integrands are cut where the tail factor drops below this).
pub const TAIL_EPS: f64 = 1e-12;

/// Coefficient of the documented sqrt(dt) discretization-bias allowance
/// used when comparing Monte-Carlo estimates against analytic values:
/// `allowance = MC_BIAS_COEF * sqrt(dt) * max(1, |value|)`.
pub const MC_BIAS_COEF: f64 = 2.0;

/// Search window for the upper threshold: `b_max = a + B_WINDOW / Phi(q)`.
/// Beyond this the asymptotic regime decides the infinite-threshold branch.
pub const B_WINDOW: f64 = 80.0;
