//! Zero-sum cancellation game between two stoppers on a credit default
//! swap: the premium payer (sup player) cancels high, the protection
//! seller (inf player) cancels low, default terminates at the first
//! passage below zero. Equilibrium thresholds (alpha*, beta*) come from
//! the continuous/smooth-fit pair; four cases cover the boundary
//! degeneracies.

use std::sync::Arc;

use crate::fluct;
use crate::mc::{self, McEstimate, SimConfig};
use crate::model::VariationClass;
use crate::num::quad;
use crate::num::roots;
use crate::report::CheckReport;
use crate::scale::ScaleFamily;
use crate::solve_common::{inner_extremum, SolveError};
use crate::tol;

#[derive(Debug, Clone)]
pub struct GameSpec {
    pub family: Arc<ScaleFamily>,
    /// Premium rate p > 0 (paid by the sup player while the contract runs).
    pub premium: f64,
    /// Cancellation fee paid by the sup player.
    pub gamma_sup: f64,
    /// Cancellation fee paid by the inf player.
    pub gamma_inf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameCase {
    /// 0 < alpha* < beta* < inf, both fit conditions hold.
    One,
    /// 0 < alpha* = alpha_under, beta* = inf.
    Two,
    /// alpha* = 0, beta* < inf.
    Three,
    /// alpha* = 0, beta* = inf.
    Four,
}

#[derive(Debug, Clone)]
pub struct GameSolution {
    spec: GameSpec,
    pub case: GameCase,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub residual_big: f64,
    pub residual_small: Option<f64>,
    pub alpha_under: f64,
    pub alpha_bar: f64,
    /// Remark on degenerate lower boundaries: alpha* = 0 supports a Nash
    /// equilibrium only when the jump part has bounded variation.
    pub warning: Option<String>,
}

impl GameSpec {
    pub fn new(family: Arc<ScaleFamily>, premium: f64, gamma_sup: f64, gamma_inf: f64) -> Result<Self, SolveError> {
        if !(premium > 0.0) {
            return Err(SolveError::Invalid(format!("premium p must be positive, got {premium}")));
        }
        if !(gamma_sup + gamma_inf > 0.0) {
            return Err(SolveError::Invalid(format!(
                "gamma_S + gamma_I > 0 violated: {gamma_sup} + {gamma_inf}"
            )));
        }
        if !(0.0..1.0).contains(&gamma_inf) {
            return Err(SolveError::Invalid(format!(
                "need 0 <= gamma_I < 1 (default payment normalized to 1), got {gamma_inf}"
            )));
        }
        Ok(Self { family, premium, gamma_sup, gamma_inf })
    }

    /// zeta(x) = E_x e^{-q T_0^-}.
    pub fn zeta(&self, x: f64) -> f64 {
        self.family.zeta(x)
    }

    /// Stopping payoffs (g_sup, g_inf, g_both); all vanish off (0, inf).
    pub fn payoffs(&self, x: f64) -> (f64, f64, f64) {
        if x <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let pq = self.premium / self.family.q();
        let base = (pq + 1.0) * self.zeta(x);
        (
            pq - self.gamma_sup - base,
            pq + self.gamma_inf - base,
            pq - self.gamma_sup + self.gamma_inf - base,
        )
    }

    /// `int_(alpha, inf) [g(beta - alpha) - g(beta - w)] nu~(w) dw` for
    /// g in {Z, W}; hyperexponential terms in closed form.
    fn nu_bracket(&self, alpha: f64, beta: f64, use_z: bool) -> f64 {
        let fam = &self.family;
        let model = fam.model();
        let g_ref = if use_z { fam.z(beta - alpha) } else { fam.w(beta - alpha) };
        let mut total = 0.0;
        if !model.jumps().terms.is_empty() && fam.backend() == crate::scale::Backend::PartialFraction {
            // Closed form: g(t) = sum_k c_k e^{r_k t} (weights q w_k / r_k
            // for Z; w_k for W), plus the flat continuation below zero.
            let (roots_w, coefs): (Vec<f64>, Vec<f64>) = fam.pf_exponential_sum(use_z);
            let flat = if use_z { 1.0 } else { 0.0 }; // g on (-inf, 0]
            for t in &model.jumps().terms {
                // w in [alpha, beta]: g(beta - w) is the exponential sum.
                let mut int_g = 0.0;
                if beta > alpha {
                    for (&r, &c) in roots_w.iter().zip(&coefs) {
                        let ci = r + t.decay;
                        let d = beta - alpha;
                        let phi1 = if (ci * d).abs() < 1e-8 {
                            d * (1.0 - 0.5 * ci * d)
                        } else {
                            -(-ci * d).exp_m1() / ci
                        };
                        int_g += c * (r * d - t.decay * alpha).exp() * t.decay * phi1;
                    }
                }
                // w > max(alpha, beta): g is flat.
                let tail_from = beta.max(alpha);
                int_g += flat * (-t.decay * tail_from).exp();
                let nu_bar_alpha = (-t.decay * alpha).exp();
                total += t.rate * (g_ref * nu_bar_alpha - int_g);
            }
        } else if !model.jumps().is_empty() {
            // Quadrature on the combined integrand (integrable even at an
            // infinite-activity singularity as long as alpha > 0).
            let g = |t: f64| if use_z { fam.z(t) } else { fam.w(t) };
            let integrand = |w: f64| (g_ref - g(beta - w)) * model.nu_density_mag(w);
            let mut lo = alpha;
            let mut span = (beta - alpha).max(1.0);
            for _ in 0..40 {
                let cuts: Vec<f64> = [beta].iter().copied().filter(|&c| c > lo && c < lo + span).collect();
                total += quad::integrate_best(&integrand, lo, lo + span, &cuts);
                lo += span;
                span *= 2.0;
                if model.nu_bar(lo) * (g_ref.abs() + 1.0) < tol::TAIL_EPS * (1.0 + total.abs()) {
                    break;
                }
            }
        }
        total
    }

    /// Lambda(alpha, beta) of the game.
    pub fn big_lambda(&self, alpha: f64, beta: f64) -> f64 {
        let fam = &self.family;
        let q = fam.q();
        let pq = self.premium / q;
        pq - self.gamma_sup - (pq + self.gamma_inf) * fam.z(beta - alpha)
            + (1.0 - self.gamma_inf) / q * self.nu_bracket(alpha, beta, true)
    }

    /// lambda(alpha, beta) = d Lambda / d beta.
    pub fn small_lambda(&self, alpha: f64, beta: f64) -> f64 {
        let fam = &self.family;
        -(self.premium + self.gamma_inf * fam.q()) * fam.w(beta - alpha)
            + (1.0 - self.gamma_inf) * self.nu_bracket(alpha, beta, false)
    }

    /// hat-lambda(alpha, beta) = lambda / W(beta - alpha).
    pub fn hat_lambda_two(&self, alpha: f64, beta: f64) -> f64 {
        self.small_lambda(alpha, beta) / self.family.w(beta - alpha)
    }

    /// hat-lambda(alpha) = lim_{beta -> alpha+} lambda/W
    ///                   = -(p + q gamma_I) + (1 - gamma_I) nu_bar(alpha).
    pub fn hat_lambda(&self, alpha: f64) -> f64 {
        -(self.premium + self.family.q() * self.gamma_inf)
            + (1.0 - self.gamma_inf) * self.family.model().nu_bar(alpha)
    }

    /// hat-lambda(alpha, inf) = Phi(q) Psi(alpha; hat-lambda).
    pub fn hat_lambda_inf(&self, alpha: f64) -> f64 {
        let fam = &self.family;
        let phi = fam.phi_q();
        let model = fam.model();
        let psi_nu_bar = if model.is_rational() {
            model
                .jumps()
                .terms
                .iter()
                .map(|t| t.rate * (-t.decay * alpha).exp() / (phi + t.decay))
                .sum::<f64>()
        } else {
            fam.psi_integral(alpha, &|y| model.nu_bar(y), &[], 0.0)
                .unwrap_or(f64::NAN)
        };
        -(self.premium + fam.q() * self.gamma_inf) + (1.0 - self.gamma_inf) * phi * psi_nu_bar
    }

    /// (alpha_under, alpha_bar): sign-change points of hat-lambda(., inf)
    /// and hat-lambda (both decreasing), clamped at the zero boundary.
    pub fn alpha_bounds(&self) -> (f64, f64) {
        let bar = self.decreasing_root(&|a| self.hat_lambda(a));
        let under = self.decreasing_root(&|a| self.hat_lambda_inf(a));
        (under, bar)
    }

    fn decreasing_root(&self, h: &dyn Fn(f64) -> f64) -> f64 {
        if h(1e-12) <= 0.0 {
            return 0.0; // negative on all of (0, inf): clamp to the lower end
        }
        match roots::expand_until(&|a| h(a) < 0.0, 1.0, 200) {
            Some(hi) => roots::bisect(h, 1e-12, hi, 1e-14),
            None => f64::INFINITY,
        }
    }

    fn window(&self) -> f64 {
        tol::B_WINDOW / self.family.phi_q()
    }

    /// sup over beta in (alpha, alpha + window] of Lambda(alpha, .).
    fn inner_max(&self, alpha: f64) -> crate::solve_common::InnerExtremum {
        inner_extremum(
            &|b| self.small_lambda(alpha, b),
            &|b| self.big_lambda(alpha, b),
            alpha,
            alpha + self.window(),
            false,
        )
    }

    /// Locate the equilibrium thresholds and classify the case.
    pub fn solve(&self) -> Result<GameSolution, SolveError> {
        let (a_under, a_bar) = self.alpha_bounds();
        let warn = || {
            let unbounded_jumps = matches!(
                self.family.model().jumps().general.as_ref(),
                Some(g) if !g.finite_variation
            );
            unbounded_jumps.then(|| {
                "alpha* = 0 with an unbounded-variation jump part: the \
                 threshold pair may fail to be a Nash equilibrium"
                    .to_string()
            })
        };
        if a_under > 0.0 {
            let at_under = self.inner_max(a_under);
            if at_under.val > 0.0 {
                // Case 1: root of alpha -> sup_beta Lambda on (a_under, a_bar).
                let h = |a: f64| self.inner_max(a).val;
                let h_bar = h(a_bar);
                if h_bar > 0.0 {
                    let samples: Vec<(f64, f64)> = (0..=6)
                        .map(|i| {
                            let a = a_under + (a_bar - a_under) * i as f64 / 6.0;
                            (a, h(a))
                        })
                        .collect();
                    return Err(SolveError::Bracket { what: "sup_beta Lambda root in alpha".into(), samples });
                }
                let alpha_star = roots::bisect(&h, a_under, a_bar, 1e-15);
                let inner = self.inner_max(alpha_star);
                return Ok(GameSolution {
                    spec: self.clone(),
                    case: GameCase::One,
                    alpha_star,
                    beta_star: inner.arg,
                    residual_big: inner.val,
                    residual_small: Some(inner.deriv),
                    alpha_under: a_under,
                    alpha_bar: a_bar,
                    warning: None,
                });
            }
            // Case 2: the sup player never stops; alpha* = alpha_under.
            return Ok(GameSolution {
                spec: self.clone(),
                case: GameCase::Two,
                alpha_star: a_under,
                beta_star: f64::INFINITY,
                residual_big: self.hat_lambda_inf(a_under),
                residual_small: None,
                alpha_under: a_under,
                alpha_bar: a_bar,
                warning: None,
            });
        }
        // alpha* = 0 (cases 3/4); beta* from the remaining fit condition.
        let inner = self.inner_max(0.0);
        if inner.interior && inner.val.is_finite() {
            Ok(GameSolution {
                spec: self.clone(),
                case: GameCase::Three,
                alpha_star: 0.0,
                beta_star: inner.arg,
                residual_big: inner.val,
                residual_small: Some(inner.deriv),
                alpha_under: a_under,
                alpha_bar: a_bar,
                warning: warn(),
            })
        } else {
            Ok(GameSolution {
                spec: self.clone(),
                case: GameCase::Four,
                alpha_star: 0.0,
                beta_star: f64::INFINITY,
                residual_big: self.hat_lambda_inf(0.0),
                residual_small: None,
                alpha_under: a_under,
                alpha_bar: a_bar,
                warning: warn(),
            })
        }
    }

    /// Samples of beta -> (Lambda, lambda) for a family of anchors alpha.
    pub fn lambda_curves(&self, anchors: &[f64], n: usize) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for &a in anchors {
            let hi = a + self.window().min(20.0 / self.family.phi_q());
            for i in 1..=n {
                let b = a + (hi - a) * i as f64 / n as f64;
                out.push((a, b, self.big_lambda(a, b), self.small_lambda(a, b)));
            }
        }
        out
    }
}

impl GameSolution {
    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    /// Equilibrium value function: g_inf at and below alpha*, g_sup at and
    /// above beta*, the scale-function interpolation in between. Outside
    /// case 1 the same formulas are exposed but their equilibrium status is
    /// the paper's degenerate branch (see `warning`).
    pub fn value(&self, x: f64) -> f64 {
        let spec = &self.spec;
        let fam = &spec.family;
        let q = fam.q();
        let pq = spec.premium / q;
        if x <= self.alpha_star {
            return spec.payoffs(x).1;
        }
        if x >= self.beta_star {
            return spec.payoffs(x).0;
        }
        // J(x) = Upsilon(x; alpha*, beta*) via the general two-threshold
        // expression; the leading ratio vanishes at the case-1 fit.
        let lead = if self.beta_star.is_finite() {
            fam.w(x - self.alpha_star) * self.residual_big / fam.w(self.beta_star - self.alpha_star)
        } else {
            fam.w(x - self.alpha_star) * self.residual_big / fam.phi_q()
        };
        let j = lead - spec.big_lambda(self.alpha_star, x) + pq - spec.gamma_sup;
        -(pq + 1.0) * fam.zeta(x) + j
    }

    /// Sandwich, generator sign pattern, and fit checks of the equilibrium
    /// candidate (case 1).
    pub fn vi_check(&self, grid: &[f64], tol_vi: f64) -> CheckReport {
        let spec = &self.spec;
        let fam = &spec.family;
        let q = fam.q();
        let mut report = CheckReport::default();
        let v = |x: f64| self.value(x);
        let mut kinks = vec![0.0, self.alpha_star];
        if self.beta_star.is_finite() {
            kinks.push(self.beta_star);
        }
        for &x in grid {
            if x <= 0.0 {
                continue;
            }
            if kinks.iter().any(|&k| (x - k).abs() < 2e-2) {
                continue;
            }
            let (g_sup, g_inf, _) = spec.payoffs(x);
            let vx = v(x);
            report.push(
                "sandwich g_S <= v <= g_I",
                Some(x),
                (g_sup - vx).max(vx - g_inf).max(0.0),
                tol_vi,
                vx >= g_sup - tol_vi && vx <= g_inf + tol_vi,
            );
            let gen = match fluct::apply_generator(fam.model(), q, &v, &kinks, x) {
                Ok(g) => g,
                Err(e) => {
                    report.push(format!("generator evaluation failed: {e}"), Some(x), f64::NAN, tol_vi, false);
                    continue;
                }
            };
            if x < self.alpha_star {
                report.push("(L-q)v >= 0 below alpha*", Some(x), (-gen).max(0.0), tol_vi, gen >= -tol_vi);
                let lam_hat = spec.hat_lambda(x);
                report.push("(L-q)v = hat-lambda below alpha*", Some(x), (gen - lam_hat).abs(), tol_vi, (gen - lam_hat).abs() <= tol_vi);
            } else if x < self.beta_star {
                report.push("(L-q)v = 0 in the continuation region", Some(x), gen.abs(), tol_vi, gen.abs() <= tol_vi);
            } else {
                report.push("(L-q)v <= 0 above beta*", Some(x), gen.max(0.0), tol_vi, gen <= tol_vi);
            }
        }
        report
    }

    /// Monte-Carlo saddle check at `x`: unilateral deviations of either
    /// player from (alpha*, beta*) must not improve their side of the
    /// transformed payoff, within 3 pooled standard errors plus the
    /// discretization allowances.
    pub fn saddle_check(
        &self,
        x: f64,
        alpha_devs: &[f64],
        beta_devs: &[f64],
        cfg: &SimConfig,
    ) -> Result<SaddleReport, SolveError> {
        let spec = &self.spec;
        let model = spec.family.model();
        let q = spec.family.q();
        let g_sup = |y: f64| spec.payoffs(y).0;
        let g_inf = |y: f64| spec.payoffs(y).1;
        let transform = mc::GameTransform { g_sup: &g_sup, g_inf: &g_inf };
        let run = |alpha: f64, beta: f64, seed_shift: u64| -> Result<McEstimate, SolveError> {
            let mut cfg2 = *cfg;
            cfg2.seed = cfg.seed.wrapping_add(seed_shift);
            let out = mc::game_payoff(
                model,
                q,
                spec.premium,
                spec.gamma_sup,
                spec.gamma_inf,
                alpha,
                beta,
                x,
                Some(&transform),
                &cfg2,
            )?;
            Ok(out.transformed.expect("transform requested"))
        };
        let center = run(self.alpha_star, self.beta_star, 0)?;
        let mut entries = Vec::new();
        let mut shift = 1;
        for &beta in beta_devs {
            // sup player deviates: value must not rise above the center
            let est = run(self.alpha_star, beta, shift)?;
            shift += 1;
            let pooled = 3.0 * (est.std_error.powi(2) + center.std_error.powi(2)).sqrt()
                + mc::bias_allowance(cfg.dt, center.mean);
            entries.push(SaddleEntry {
                player: "sup",
                threshold: beta,
                estimate: est.mean,
                bound: center.mean + pooled,
                pass: est.mean <= center.mean + pooled,
            });
        }
        for &alpha in alpha_devs {
            // inf player deviates: value must not drop below the center
            let est = run(alpha, self.beta_star, shift)?;
            shift += 1;
            let pooled = 3.0 * (est.std_error.powi(2) + center.std_error.powi(2)).sqrt()
                + mc::bias_allowance(cfg.dt, center.mean);
            entries.push(SaddleEntry {
                player: "inf",
                threshold: alpha,
                estimate: est.mean,
                bound: center.mean - pooled,
                pass: est.mean >= center.mean - pooled,
            });
        }
        Ok(SaddleReport { center, entries })
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SaddleEntry {
    pub player: &'static str,
    pub threshold: f64,
    pub estimate: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, serde::Serialize)]
pub struct SaddleReport {
    pub center: McEstimate,
    pub entries: Vec<SaddleEntry>,
}

impl SaddleReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}
