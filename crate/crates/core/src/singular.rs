//! Two-sided singular control: double reflection at thresholds (a*, b*)
//! selected by the continuous/smooth-fit pair Lambda = 0, lambda = 0,
//! with variational-inequality verification.

use std::sync::Arc;

use crate::fluct;
use crate::num::poly::{PiecewisePoly, Side};
use crate::num::roots;
use crate::report::CheckReport;
use crate::scale::ScaleFamily;
use crate::solve_common::{inner_extremum, SolveError};
use crate::thresholds;
use crate::tol;

#[derive(Debug, Clone)]
pub struct SingularProblem {
    pub family: Arc<ScaleFamily>,
    pub f: PiecewisePoly,
    pub c_u: f64,
    pub c_d: f64,
    /// Closed interval the controlled process must stay in (ends may be
    /// infinite).
    pub interval: (f64, f64),
    f_tilde: PiecewisePoly,
    f_tilde_prime: PiecewisePoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularCase {
    /// Both fit conditions hold at an interior pair.
    Interior,
    /// a* = a_under with b* = infinite (the never-push-down branch).
    BStarInfinite,
    /// Capital injections for the dual (flipped spectrally positive) model:
    /// a* from Z inversion, b* at the origin boundary.
    DividendDual,
    /// Dividends with injections, spectrally negative: a* = 0 boundary,
    /// b* from the one-parameter smooth-fit root.
    DividendSn,
}

#[derive(Debug, Clone)]
pub struct SingularSolution {
    problem: SingularProblem,
    pub case: SingularCase,
    pub a_star: f64,
    /// May be infinite (BStarInfinite).
    pub b_star: f64,
    /// Residual of the Lambda fit condition (its limiting form when
    /// b* is infinite).
    pub residual_big: f64,
    /// Residual of the lambda fit condition where applicable.
    pub residual_small: Option<f64>,
    pub a_under: f64,
    pub a_bar: f64,
}

impl SingularProblem {
    pub fn new(
        family: Arc<ScaleFamily>,
        f: PiecewisePoly,
        c_u: f64,
        c_d: f64,
        interval: (f64, f64),
    ) -> Result<Self, SolveError> {
        if !(c_u + c_d > 0.0) {
            return Err(SolveError::Invalid(format!(
                "C_U + C_D > 0 violated: {c_u} + {c_d} = {}",
                c_u + c_d
            )));
        }
        if !family.model().has_finite_mean() {
            return Err(SolveError::Assumption(
                "E X_1 = psi'(0+) > -infinity required for the injection NPV".into(),
            ));
        }
        if interval.0 >= interval.1 {
            return Err(SolveError::Invalid(format!(
                "interval must be nondegenerate, got [{}, {}]",
                interval.0, interval.1
            )));
        }
        if !f.is_zero() && !f.is_convex() {
            return Err(SolveError::Invalid(
                "running cost f must be convex for the interior solver path".into(),
            ));
        }
        let q = family.q();
        let f_tilde = f.plus_affine(0.0, c_u * q);
        let f_tilde_prime = f_tilde.derivative();
        Ok(Self { family, f, c_u, c_d, interval, f_tilde, f_tilde_prime })
    }

    /// Right derivative of the slope-changed cost: f'(x+) + C_U q.
    pub fn f_tilde_prime(&self, x: f64) -> f64 {
        self.f_tilde_prime.eval_side(x, Side::Right)
    }

    pub fn f_tilde(&self, x: f64) -> f64 {
        self.f_tilde.eval(x)
    }

    /// Lambda(a, b) = C_D + C_U + phi_a(b; f~').
    pub fn big_lambda(&self, a: f64, b: f64) -> f64 {
        self.c_d + self.c_u + self.family.phi_integral_poly(a, b, &self.f_tilde_prime)
    }

    /// lambda(a, b) = d Lambda / d b
    ///              = int_a^b W'(b-y) f~'(y) dy + f~'(b-) W(0).
    pub fn small_lambda(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return self.f_tilde_prime.eval_side(b, Side::Left) * self.family.w_at_zero();
        }
        let fam = &self.family;
        let integrand = |y: f64| fam.w_prime(b - y, Side::Right) * self.f_tilde_prime.eval(y);
        let inner = crate::num::quad::integrate_best(&integrand, a, b, self.f_tilde_prime.breaks());
        inner + self.f_tilde_prime.eval_side(b, Side::Left) * fam.w_at_zero()
    }

    /// (a_under, a_bar): sign-change points of Psi(.; f~') and of f~'.
    pub fn threshold_bounds(&self) -> Result<(f64, f64), SolveError> {
        let bar = thresholds::a_bar(&self.f_tilde_prime, self.interval);
        let under = thresholds::a_under(&self.family, &self.f_tilde_prime, self.interval);
        if !bar.is_interior() || !under.is_interior() {
            return Err(SolveError::Assumption(
                "f~' has no interior sign change (no finite a_bar / a_under)".into(),
            ));
        }
        Ok((under.value(), bar.value()))
    }

    fn b_window(&self) -> f64 {
        tol::B_WINDOW / self.family.phi_q()
    }

    /// Infimum of Lambda(a, .) over (a, a + window].
    fn inner_min(&self, a: f64) -> crate::solve_common::InnerExtremum {
        inner_extremum(
            &|b| self.small_lambda(a, b),
            &|b| self.big_lambda(a, b),
            a,
            a + self.b_window(),
            true,
        )
    }

    /// Solve for the optimal pair. Dispatches the dividend special cases on
    /// their problem shape (f = 0 with a one-sided interval); otherwise runs
    /// the interior two-parameter search.
    pub fn solve(&self) -> Result<SingularSolution, SolveError> {
        if self.f.is_zero() {
            if self.interval.0 == f64::NEG_INFINITY && self.interval.1 == 0.0 && self.c_u < 0.0 {
                return self.solve_dividend_dual();
            }
            if self.interval.0 == 0.0 && self.interval.1 == f64::INFINITY && self.c_d < 0.0 {
                return self.solve_dividend_sn();
            }
            return Err(SolveError::Invalid(
                "f = 0 on a two-sided interval has no interior solution (never intervene)".into(),
            ));
        }
        let (a_under, a_bar) = self.threshold_bounds()?;
        let g_under = self.inner_min(a_under);
        if g_under.val > 0.0 {
            // Case (2): pushing down is never optimal; a* = a_under.
            let residual_big = self.family.psi_integral_poly(a_under, &self.f_tilde_prime);
            return Ok(SingularSolution {
                problem: self.clone(),
                case: SingularCase::BStarInfinite,
                a_star: a_under,
                b_star: f64::INFINITY,
                residual_big,
                residual_small: None,
                a_under,
                a_bar,
            });
        }
        // inf_b Lambda(a, b) is increasing in a; its root lies in [a_under, a_bar].
        let g = |a: f64| self.inner_min(a).val;
        let g_bar = g(a_bar);
        if g_bar < 0.0 {
            let samples: Vec<(f64, f64)> = (0..=8)
                .map(|i| {
                    let a = a_under + (a_bar - a_under) * i as f64 / 8.0;
                    (a, g(a))
                })
                .collect();
            return Err(SolveError::Bracket { what: "inf_b Lambda(a, .) root in a".into(), samples });
        }
        let a_star = roots::bisect(&g, a_under, a_bar, 1e-15);
        let inner = self.inner_min(a_star);
        Ok(SingularSolution {
            problem: self.clone(),
            case: SingularCase::Interior,
            a_star,
            b_star: inner.arg,
            residual_big: inner.val,
            residual_small: Some(inner.deriv),
            a_under,
            a_bar,
        })
    }

    /// Capital injections under the flipped spectrally positive model:
    /// f = 0, I = (-inf, 0], C_U < 0, beta = -C_D/C_U > 1. The fit condition
    /// reduces to C_D + C_U Z(-a*) = 0 with b* = 0.
    fn solve_dividend_dual(&self) -> Result<SingularSolution, SolveError> {
        let beta = -self.c_d / self.c_u;
        if !(beta > 1.0) {
            return Err(SolveError::Invalid(format!(
                "dual dividend shape requires -C_D/C_U > 1, got {beta}"
            )));
        }
        let fam = &self.family;
        // Z is increasing from 1 with Z(inf) = inf; bracket and bisect.
        let hi = roots::expand_until(&|t| fam.z(t) > beta, 1.0, 200)
            .ok_or_else(|| SolveError::Invalid("Z never reaches beta".into()))?;
        let t = roots::bisect(&|t| fam.z(t) - beta, 0.0, hi, 1e-15);
        let a_star = -t;
        Ok(SingularSolution {
            problem: self.clone(),
            case: SingularCase::DividendDual,
            a_star,
            b_star: 0.0,
            residual_big: self.c_d + self.c_u * fam.z(-a_star),
            residual_small: None,
            a_under: f64::NAN,
            a_bar: 0.0,
        })
    }

    /// De Finetti dividends with forced injections at zero: f = 0,
    /// I = [0, inf), C_D < 0, C_U = beta > 1; a* is pinned at 0 and b* is the
    /// smallest root of the remaining smooth-fit condition
    /// `(C_D + C_U Z(b)) W'(b-) / W(b) - q C_U W(b) = 0`.
    pub fn solve_dividend_sn(&self) -> Result<SingularSolution, SolveError> {
        if !self.f.is_zero() || self.interval != (0.0, f64::INFINITY) {
            return Err(SolveError::Invalid(
                "dividend-SN path needs f = 0 and I = [0, inf)".into(),
            ));
        }
        let fam = &self.family;
        let cond = |b: f64| {
            (self.c_d + self.c_u * fam.z(b)) * fam.w_prime(b, Side::Left) / fam.w(b)
                - fam.q() * self.c_u * fam.w(b)
        };
        // Scan for the smallest sign change, then bisect.
        let hi = self.b_window();
        let brackets = roots::sign_changes(&cond, 1e-6, hi, 512);
        let (lo, up) = brackets.first().copied().ok_or_else(|| SolveError::Bracket {
            what: "dividend-SN smooth-fit root".into(),
            samples: (0..=8).map(|i| {
                let b = 1e-6 + (hi - 1e-6) * i as f64 / 8.0;
                (b, cond(b))
            }).collect(),
        })?;
        let b_star = roots::bisect(&cond, lo, up, 1e-15);
        Ok(SingularSolution {
            problem: self.clone(),
            case: SingularCase::DividendSn,
            a_star: 0.0,
            b_star,
            residual_big: cond(b_star),
            residual_small: None,
            a_under: f64::NAN,
            a_bar: 0.0,
        })
    }

    /// General double-barrier NPV evaluator (any a < b), used by the
    /// brute-force optimality cross-checks.
    pub fn value_general(&self, a: f64, b: f64, x: f64) -> f64 {
        let fam = &self.family;
        if x > b {
            return self.value_general(a, b, b) + self.c_d * (x - b);
        }
        let lam = self.big_lambda(a, b);
        let r = fam.r_big(x - a).expect("finite mean checked at construction");
        lam / (fam.q() * fam.w(b - a)) * fam.z(x - a) - self.c_u * r
            + self.f.eval(a) / fam.q() * fam.z(x - a)
            - fam.phi_integral_poly(a, x, &self.f)
    }

    /// Samples of b -> (Lambda, lambda) for a family of starting values a
    /// (the data behind the fit-condition plots).
    pub fn lambda_curves(&self, anchors: &[f64], n: usize) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for &a in anchors {
            let hi = a + self.b_window().min(20.0 / self.family.phi_q());
            for i in 1..=n {
                let b = a + (hi - a) * i as f64 / n as f64;
                out.push((a, b, self.big_lambda(a, b), self.small_lambda(a, b)));
            }
        }
        out
    }
}

impl SingularSolution {
    pub fn problem(&self) -> &SingularProblem {
        &self.problem
    }

    /// Candidate value function. Below b* this is the closed form in terms
    /// of R, Z, and phi; above b* it continues linearly with slope C_D.
    pub fn value(&self, x: f64) -> f64 {
        let prob = &self.problem;
        let fam = &prob.family;
        match self.case {
            SingularCase::DividendSn => prob.value_general(self.a_star, self.b_star, x),
            _ => {
                // Fit condition c_a holds, so the Lambda term vanishes.
                if x > self.b_star {
                    return self.value(self.b_star) + prob.c_d * (x - self.b_star);
                }
                let r = fam.r_big(x - self.a_star).expect("finite mean");
                -prob.c_u * r + prob.f.eval(self.a_star) / fam.q() * fam.z(x - self.a_star)
                    - fam.phi_integral_poly(self.a_star, x, &prob.f)
            }
        }
    }

    /// One-sided-free derivative of the value (exact piecewise form).
    pub fn value_prime(&self, x: f64) -> f64 {
        let prob = &self.problem;
        let fam = &prob.family;
        if x < self.a_star {
            return -prob.c_u;
        }
        if x > self.b_star {
            return prob.c_d;
        }
        match self.case {
            SingularCase::DividendSn => {
                let lam = prob.big_lambda(self.a_star, self.b_star);
                lam / fam.w(self.b_star - self.a_star) * fam.w(x - self.a_star) - prob.c_u
                    - fam.phi_integral_poly(self.a_star, x, &prob.f_tilde_prime)
            }
            _ => -prob.big_lambda(self.a_star, x) + prob.c_d,
        }
    }

    /// Variational-inequality check on a grid: equality of (L-q)v + f in the
    /// waiting region, the inequality in the controlling regions, and the
    /// gradient constraints -C_U <= v' <= C_D.
    pub fn vi_check(&self, grid: &[f64], tol_vi: f64) -> CheckReport {
        let prob = &self.problem;
        let fam = &prob.family;
        let q = fam.q();
        let mut report = CheckReport::default();
        let v = |x: f64| self.value(x);
        let mut kinks = vec![self.a_star];
        if self.b_star.is_finite() {
            kinks.push(self.b_star);
        }
        let (ilo, ihi) = prob.interval;
        for &x in grid {
            if kinks.iter().any(|&k| (x - k).abs() < 1e-2) {
                continue;
            }
            // Gradient constraints hold up to the upper end of I.
            if x <= ihi {
                let vp = self.value_prime(x);
                let slack = (vp + prob.c_u).min(prob.c_d - vp);
                report.push("gradient -C_U <= v' <= C_D", Some(x), (-slack).max(0.0), tol_vi, slack >= -tol_vi);
            }
            if x <= ilo || x >= ihi {
                continue;
            }
            let gen = match fluct::apply_generator(fam.model(), q, &v, &kinks, x) {
                Ok(g) => g + prob.f.eval(x),
                Err(e) => {
                    report.push(format!("generator evaluation failed: {e}"), Some(x), f64::NAN, tol_vi, false);
                    continue;
                }
            };
            if x > self.a_star && x < self.b_star {
                report.push("waiting region (L-q)v + f = 0", Some(x), gen.abs(), tol_vi, gen.abs() <= tol_vi);
            } else {
                report.push("controlling region (L-q)v + f >= 0", Some(x), (-gen).max(0.0), tol_vi, gen >= -tol_vi);
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevyModel;
    use crate::scale::Backend;

    fn bm_family(q: f64) -> Arc<ScaleFamily> {
        Arc::new(ScaleFamily::build(LevyModel::brownian(1.0, 0.0), q, Backend::PartialFraction).unwrap())
    }

    fn quadratic_problem() -> SingularProblem {
        // f(x) = x^2, BM sigma = 1, q = 0.5, C_U = C_D = 0.5, I = R.
        SingularProblem::new(
            bm_family(0.5),
            PiecewisePoly::from_coeffs(vec![0.0, 0.0, 1.0]),
            0.5,
            0.5,
            (f64::NEG_INFINITY, f64::INFINITY),
        )
        .unwrap()
    }

    #[test]
    fn f_tilde_prime_examples() {
        let prob = quadratic_problem();
        // f'(1) + C_U q = 2 + 0.25
        assert!((prob.f_tilde_prime(1.0) - 2.25).abs() < 1e-14);
        // f = 0: constant C_U q
        let zero = SingularProblem::new(
            bm_family(0.5),
            PiecewisePoly::zero(),
            -1.0,
            1.5,
            (f64::NEG_INFINITY, 0.0),
        )
        .unwrap();
        assert!((zero.f_tilde_prime(3.0) - (-0.5)).abs() < 1e-14);
        // kink: |x| at 0 uses the right derivative
        let abs_f = PiecewisePoly::new(vec![0.0], vec![vec![0.0, -1.0], vec![0.0, 1.0]]).unwrap();
        let p = SingularProblem::new(bm_family(0.5), abs_f, 1.0, 1.0, (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        assert!((p.f_tilde_prime(0.0) - (1.0 + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn lambda_at_coincident_barriers() {
        let prob = quadratic_problem();
        let v = prob.big_lambda(0.3, 0.3);
        assert!((v - (prob.c_d + prob.c_u)).abs() < 1e-14);
    }

    #[test]
    fn lambda_zero_cost_closed_form() {
        // f = 0: Lambda(a,b) = C_D + C_U Z(b-a).
        let zero = SingularProblem::new(
            bm_family(0.5),
            PiecewisePoly::zero(),
            -1.0,
            1.5,
            (f64::NEG_INFINITY, 0.0),
        )
        .unwrap();
        let fam = &zero.family;
        for &(a, b) in &[(-2.0, -0.5), (-1.0, 0.0)] {
            let got = zero.big_lambda(a, b);
            let want = zero.c_d + zero.c_u * fam.z(b - a);
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn small_lambda_is_b_derivative_of_big() {
        let prob = quadratic_problem();
        let (a, b, h) = (-0.8, 0.9, 1e-4);
        let fd = (prob.big_lambda(a, b + h) - prob.big_lambda(a, b - h)) / (2.0 * h);
        let got = prob.small_lambda(a, b);
        assert!((fd - got).abs() < 1e-5, "fd={fd} got={got}");
    }

    #[test]
    fn threshold_bounds_quadratic() {
        let prob = quadratic_problem();
        let (a_under, a_bar) = prob.threshold_bounds().unwrap();
        assert!((a_bar + 0.125).abs() < 1e-10); // root of 2x + 0.25
        assert!((a_under + 1.125).abs() < 1e-10); // root of 2x + 0.25 + 2/Phi
        assert!(a_under < a_bar);
    }

    #[test]
    fn solve_quadratic_interior() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        assert_eq!(sol.case, SingularCase::Interior);
        assert!(sol.residual_big.abs() <= tol::TOL_FIT, "Lambda residual {:.2e}", sol.residual_big);
        assert!(sol.residual_small.unwrap().abs() <= tol::TOL_FIT);
        assert!(sol.a_under <= sol.a_star && sol.a_star < sol.a_bar && sol.a_bar < sol.b_star);
        // Symmetric instance: f even, C_U = C_D, driftless BM -> a* = -b*.
        assert!((sol.a_star + sol.b_star).abs() < 1e-6, "a*={} b*={}", sol.a_star, sol.b_star);
    }

    #[test]
    fn value_slopes_at_boundaries() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        assert!((sol.value_prime(sol.a_star - 1.0) + prob.c_u).abs() < 1e-12);
        assert!((sol.value_prime(sol.b_star) - prob.c_d).abs() < 1e-8);
        // first-order conditions: finite-difference partials of the general
        // evaluator vanish at the optimum
        let h = 1e-4;
        let dva = (prob.value_general(sol.a_star + h, sol.b_star, 0.0)
            - prob.value_general(sol.a_star - h, sol.b_star, 0.0))
            / (2.0 * h);
        let dvb = (prob.value_general(sol.a_star, sol.b_star + h, 0.0)
            - prob.value_general(sol.a_star, sol.b_star - h, 0.0))
            / (2.0 * h);
        assert!(dva.abs() < 1e-4, "dv/da = {dva}");
        assert!(dvb.abs() < 1e-4, "dv/db = {dvb}");
    }

    #[test]
    fn value_matches_general_evaluator_at_optimum() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        for &x in &[-2.0, sol.a_star + 0.1, 0.0, sol.b_star - 0.1, sol.b_star + 0.7] {
            let a = sol.value(x);
            let b = prob.value_general(sol.a_star, sol.b_star, x);
            assert!((a - b).abs() < 1e-7, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn lambda_nonnegative_between_thresholds() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        for i in 0..=20 {
            let x = sol.a_star + (sol.b_star - sol.a_star) * i as f64 / 20.0;
            assert!(prob.big_lambda(sol.a_star, x) >= -tol::TOL_FIT);
        }
    }

    #[test]
    fn convexity_of_value() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=60 {
            let x = sol.a_star - 2.0 + (sol.b_star - sol.a_star + 4.0) * i as f64 / 60.0;
            let vp = sol.value_prime(x);
            assert!(vp >= prev - 1e-9, "v' not nondecreasing at {x}");
            prev = vp;
        }
    }

    #[test]
    fn smooth_fit_suite() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        let h = 1e-4;
        for &t in &[sol.a_star, sol.b_star] {
            // first derivatives agree (unbounded variation: both thresholds)
            let left = (sol.value(t) - sol.value(t - h)) / h;
            let right = (sol.value(t + h) - sol.value(t)) / h;
            assert!((left - right).abs() < 1e-5 * 10.0, "v' mismatch at {t}: {left} vs {right}");
            // second derivatives agree within 1e-3
            let l2 = (sol.value(t) - 2.0 * sol.value(t - h) + sol.value(t - 2.0 * h)) / (h * h);
            let r2 = (sol.value(t + 2.0 * h) - 2.0 * sol.value(t + h) + sol.value(t)) / (h * h);
            assert!((l2 - r2).abs() < 1e-3 * 10.0, "v'' mismatch at {t}: {l2} vs {r2}");
        }
    }

    #[test]
    fn brute_force_grid_confirms_optimum() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        let v_star = prob.value_general(sol.a_star, sol.b_star, 0.0);
        let (da, db) = (0.05, 0.05);
        for i in 0..21 {
            for j in 0..21 {
                let a = sol.a_star + (i as f64 - 10.0) * da;
                let b = sol.b_star + (j as f64 - 10.0) * db;
                if a >= b {
                    continue;
                }
                let v = prob.value_general(a, b, 0.0);
                assert!(v >= v_star - 1e-8, "({a},{b}): {v} < {v_star}");
            }
        }
    }

    #[test]
    fn vi_check_quadratic() {
        let prob = quadratic_problem();
        let sol = prob.solve().unwrap();
        let grid: Vec<f64> = (0..=60)
            .map(|i| sol.a_star - 1.5 + (sol.b_star - sol.a_star + 3.0) * i as f64 / 60.0)
            .collect();
        let report = sol.vi_check(&grid, tol::TOL_VI);
        assert!(report.passed(), "{:?}", report.violations());
        // below a*: (L-q)v + f = f~(x) - f~(a*) >= 0 analytically
        let x = sol.a_star - 0.8;
        let gen = fluct::apply_generator(prob.family.model(), 0.5, &|t| sol.value(t), &[sol.a_star, sol.b_star], x)
            .unwrap()
            + prob.f.eval(x);
        let analytic = prob.f_tilde(x) - prob.f_tilde(sol.a_star);
        assert!((gen - analytic).abs() < 1e-5, "{gen} vs {analytic}");
        assert!(analytic >= 0.0);
    }

    #[test]
    fn dividend_dual_closed_form() {
        // Example shape: f = 0, C_U = -1, C_D = beta > 1, I = (-inf, 0].
        for &beta in &[1.2, 1.5, 3.0] {
            let prob = SingularProblem::new(
                bm_family(0.5),
                PiecewisePoly::zero(),
                -1.0,
                beta,
                (f64::NEG_INFINITY, 0.0),
            )
            .unwrap();
            let sol = prob.solve().unwrap();
            assert_eq!(sol.case, SingularCase::DividendDual);
            assert_eq!(sol.b_star, 0.0);
            // direct scalar inversion of Z
            let fam = &prob.family;
            let t = roots::bisect(&|t| fam.z(t) - beta, 0.0, 50.0, 1e-15);
            assert!((sol.a_star + t).abs() < 1e-10);
            assert!(sol.residual_big.abs() < 1e-10);
            // VI above b* is vacuous: (b*, inf) lies outside I
            let grid: Vec<f64> = (0..=40).map(|i| sol.a_star - 1.0 + i as f64 * 0.05).collect();
            let report = sol.vi_check(&grid, tol::TOL_VI);
            assert!(report.passed(), "{:?}", report.violations());
        }
    }

    #[test]
    fn dividend_sn_smooth_fit_root() {
        // I = [0, inf), C_D = -1, C_U = beta > 1, f = 0.
        let mk = |beta: f64| {
            SingularProblem::new(
                bm_family(0.5),
                PiecewisePoly::zero(),
                beta,
                -1.0,
                (0.0, f64::INFINITY),
            )
            .unwrap()
        };
        let mut prev_b = 0.0;
        for &beta in &[1.2, 1.5, 2.0, 3.0] {
            let prob = mk(beta);
            let sol = prob.solve().unwrap();
            assert_eq!(sol.case, SingularCase::DividendSn);
            assert!(sol.residual_big.abs() <= 1e-8, "residual {:.2e}", sol.residual_big);
            // b* increases with the injection cost beta
            assert!(sol.b_star > prev_b, "b* not monotone in beta");
            prev_b = sol.b_star;
        }
        // first-order condition in b by finite differences at x = b*/2
        let prob = mk(1.5);
        let sol = prob.solve().unwrap();
        let x = sol.b_star / 2.0;
        let h = 1e-4;
        let d = (prob.value_general(0.0, sol.b_star + h, x) - prob.value_general(0.0, sol.b_star - h, x)) / (2.0 * h);
        assert!(d.abs() < 1e-6, "dv/db = {d}");
    }

    #[test]
    fn rejects_invalid_costs() {
        let r = SingularProblem::new(
            bm_family(0.5),
            PiecewisePoly::zero(),
            0.5,
            -0.5,
            (f64::NEG_INFINITY, f64::INFINITY),
        );
        assert!(r.is_err());
    }
}
