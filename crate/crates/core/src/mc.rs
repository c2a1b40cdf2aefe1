//! Independent Monte-Carlo estimation of the controlled-process NPVs.
//!
//! Increments are exact in law for Brownian-plus-hyperexponential models
//! (Gaussian part plus a Poisson number of mixture-exponential jumps), so
//! the only discretization effect is barrier monitoring at the grid times.
//! That bias is first order in sqrt(dt) and is accounted for by an explicit
//! allowance term instead of bridge corrections.
//!
//! Reproducibility: every path draws from its own counter-based stream
//! derived from (seed, path index), and reduction is done in fixed order,
//! so results are independent of evaluation parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{LevyModel, VariationClass};
use crate::tol;

#[derive(Debug, thiserror::Error)]
pub enum McError {
    #[error("Monte-Carlo simulation supports hyperexponential models only")]
    UnsupportedModel,
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Horizon; discounted truncation bias is below 1e-8 once q*t_max >= 18.
    pub t_max: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(q: f64, dt: f64, n_paths: u64, seed: u64) -> Self {
        Self { dt, t_max: 18.0 / q, n_paths, seed, antithetic: false }
    }

    pub fn validate(&self, q: f64) -> Result<(), McError> {
        if !(self.dt > 0.0) {
            return Err(McError::BadConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(McError::BadConfig("n_paths must be positive".into()));
        }
        if q * self.t_max < 18.0 - 1e-9 {
            return Err(McError::BadConfig(format!(
                "q * t_max = {} < 18; discounted truncation bias would exceed 1e-8",
                q * self.t_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub dt: f64,
    pub bias_note: String,
}

impl McEstimate {
    /// Comparison tolerance against an analytic value: three standard errors
    /// plus the documented sqrt(dt) discretization allowance.
    pub fn tolerance_against(&self, analytic: f64) -> f64 {
        3.0 * self.std_error + bias_allowance(self.dt, analytic)
    }

    pub fn agrees_with(&self, analytic: f64) -> bool {
        (self.mean - analytic).abs() <= self.tolerance_against(analytic)
    }
}

/// `MC_BIAS_COEF * sqrt(dt) * max(1, |value|)`.
pub fn bias_allowance(dt: f64, value: f64) -> f64 {
    tol::MC_BIAS_COEF * dt.sqrt() * value.abs().max(1.0)
}

fn bias_note(dt: f64) -> String {
    format!("barrier-monitoring bias allowance {} * sqrt(dt) * max(1,|v|), dt = {dt}", tol::MC_BIAS_COEF)
}

// ---- increment sampling -----------------------------------------------------

/// Exact-in-law increment sampler for Brownian-plus-hyperexponential models.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    drift_dt: f64,
    sig_sqdt: f64,
    exp_neg_mean: f64,
    /// Cumulative component probabilities and their decay rates.
    cum: Vec<(f64, f64)>,
    mirror: bool,
}

impl IncrementSampler {
    pub fn new(model: &LevyModel, dt: f64) -> Result<Self, McError> {
        if model.jumps().general.is_some() {
            return Err(McError::UnsupportedModel);
        }
        let total = model.jump_rate_total();
        let mut cum = Vec::with_capacity(model.jumps().terms.len());
        let mut acc = 0.0;
        for t in &model.jumps().terms {
            acc += t.rate / total.max(f64::MIN_POSITIVE);
            cum.push((acc, t.decay));
        }
        Ok(Self {
            drift_dt: model.drift_fa() * dt,
            sig_sqdt: model.sigma() * dt.sqrt(),
            exp_neg_mean: (-total * dt).exp(),
            cum,
            mirror: false,
        })
    }

    pub fn mirrored(&self) -> Self {
        Self { mirror: true, ..self.clone() }
    }

    #[inline]
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut dx = self.drift_dt;
        if self.sig_sqdt > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            dx += self.sig_sqdt * if self.mirror { -z } else { z };
        }
        if !self.cum.is_empty() {
            // Knuth: number of events before the uniform product drops
            // below e^{-mean}; jump magnitudes drawn inside the loop.
            let mut p: f64 = rng.gen();
            while p > self.exp_neg_mean {
                let u: f64 = rng.gen();
                let mut decay = self.cum.last().unwrap().1;
                for &(c, d) in &self.cum {
                    if u <= c {
                        decay = d;
                        break;
                    }
                }
                let e: f64 = rng.gen();
                dx -= -(1.0 - e).ln() / decay;
                p *= rng.gen::<f64>();
            }
        }
        dx
    }
}

/// One increment of X over dt (spec-level convenience; hot loops hold an
/// `IncrementSampler`).
pub fn simulate_increment(model: &LevyModel, dt: f64, rng: &mut ChaCha8Rng) -> Result<f64, McError> {
    Ok(IncrementSampler::new(model, dt)?.sample(rng))
}

// ---- path engine --------------------------------------------------------------

fn rng_for(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Run the per-path body over all paths and reduce K outputs to estimates.
/// With antithetic pairing, path i is the average of the plain and the
/// Gaussian-mirrored replay of stream i (jumps shared).
fn run_paths<const K: usize>(
    cfg: &SimConfig,
    sampler: &IncrementSampler,
    mut body: impl FnMut(&mut ChaCha8Rng, &IncrementSampler) -> [f64; K],
) -> [McEstimate; K] {
    let mirrored = sampler.mirrored();
    let mut count = 0u64;
    let mut mean = [0.0_f64; K];
    let mut m2 = [0.0_f64; K];
    let effective = if cfg.antithetic { cfg.n_paths / 2 } else { cfg.n_paths };
    for i in 0..effective.max(1) {
        let mut v = body(&mut rng_for(cfg.seed, i), sampler);
        if cfg.antithetic {
            let v2 = body(&mut rng_for(cfg.seed, i), &mirrored);
            for k in 0..K {
                v[k] = 0.5 * (v[k] + v2[k]);
            }
        }
        count += 1;
        for k in 0..K {
            let d = v[k] - mean[k];
            mean[k] += d / count as f64;
            m2[k] += d * (v[k] - mean[k]);
        }
    }
    std::array::from_fn(|k| McEstimate {
        mean: mean[k],
        std_error: if count > 1 { (m2[k] / (count - 1) as f64 / count as f64).sqrt() } else { f64::NAN },
        n_paths: count,
        dt: cfg.dt,
        bias_note: bias_note(cfg.dt),
    })
}

// ---- estimators ----------------------------------------------------------------

/// Laplace transforms of the two-sided exit from (a, b) started at x:
/// returns (up-crossing before down-crossing, down-crossing before up).
pub fn two_sided_exit(
    model: &LevyModel,
    q: f64,
    a: f64,
    b: f64,
    x: f64,
    cfg: &SimConfig,
) -> Result<(McEstimate, McEstimate), McError> {
    cfg.validate(q)?;
    let sampler = IncrementSampler::new(model, cfg.dt)?;
    let df = (-q * cfg.dt).exp();
    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    let [up, down] = run_paths(cfg, &sampler, |rng, smp| {
        let mut y = x;
        let mut disc = 1.0;
        if y > b {
            return [1.0, 0.0];
        }
        if y < a {
            return [0.0, 1.0];
        }
        for _ in 0..n_steps {
            y += smp.sample(rng);
            disc *= df;
            if y > b {
                return [disc, 0.0];
            }
            if y < a {
                return [0.0, disc];
            }
        }
        [0.0, 0.0]
    });
    Ok((up, down))
}

/// `E_x[e^{-q T_0^-}]` (no upper barrier).
pub fn ruin_laplace_mc(model: &LevyModel, q: f64, x: f64, cfg: &SimConfig) -> Result<McEstimate, McError> {
    cfg.validate(q)?;
    let sampler = IncrementSampler::new(model, cfg.dt)?;
    let df = (-q * cfg.dt).exp();
    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    let [est] = run_paths(cfg, &sampler, |rng, smp| {
        let mut y = x;
        if y < 0.0 {
            return [1.0];
        }
        let mut disc = 1.0;
        for _ in 0..n_steps {
            y += smp.sample(rng);
            disc *= df;
            if y < 0.0 {
                return [disc];
            }
        }
        [0.0]
    });
    Ok(est)
}

/// Discounted reflection flows of the doubly reflected process on [a, b]:
/// returns (NPV of upward pushes dU at a, NPV of downward pushes dD at b).
pub fn doubly_reflected_flows(
    model: &LevyModel,
    q: f64,
    a: f64,
    b: f64,
    x: f64,
    cfg: &SimConfig,
) -> Result<(McEstimate, McEstimate), McError> {
    cfg.validate(q)?;
    let sampler = IncrementSampler::new(model, cfg.dt)?;
    let df = (-q * cfg.dt).exp();
    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    let [u, d] = run_paths(cfg, &sampler, |rng, smp| {
        let mut y = x;
        let mut npv_u = 0.0;
        let mut npv_d = 0.0;
        if y < a {
            npv_u += a - y;
            y = a;
        } else if y > b {
            npv_d += y - b;
            y = b;
        }
        let mut disc = 1.0;
        for _ in 0..n_steps {
            y += smp.sample(rng);
            disc *= df;
            if y < a {
                npv_u += disc * (a - y);
                y = a;
            } else if y > b {
                npv_d += disc * (y - b);
                y = b;
            }
        }
        [npv_u, npv_d]
    });
    Ok((u, d))
}

/// Full two-sided singular-control objective under double reflection:
/// running cost f plus C_U dU + C_D dD flows, discounted.
#[allow(clippy::too_many_arguments)]
pub fn npv_doubly_reflected(
    model: &LevyModel,
    q: f64,
    a: f64,
    b: f64,
    f: &dyn Fn(f64) -> f64,
    c_u: f64,
    c_d: f64,
    x: f64,
    cfg: &SimConfig,
) -> Result<McEstimate, McError> {
    cfg.validate(q)?;
    let sampler = IncrementSampler::new(model, cfg.dt)?;
    let df = (-q * cfg.dt).exp();
    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    let [est] = run_paths(cfg, &sampler, |rng, smp| {
        let mut y = x;
        let mut acc = 0.0;
        if y < a {
            acc += c_u * (a - y);
            y = a;
        } else if y > b {
            acc += c_d * (y - b);
            y = b;
        }
        let mut disc = 1.0;
        for _ in 0..n_steps {
            // left-endpoint rule for the running cost
            acc += disc * f(y) * cfg.dt;
            y += smp.sample(rng);
            disc *= df;
            if y < a {
                acc += disc * c_u * (a - y);
                y = a;
            } else if y > b {
                acc += disc * c_d * (y - b);
                y = b;
            }
        }
        [acc]
    });
    Ok(est)
}

/// NPV of the lower reflection flow, killed at the first up-crossing of b.
pub fn reflected_lower_injection(
    model: &LevyModel,
    q: f64,
    a: f64,
    b: f64,
    x: f64,
    cfg: &SimConfig,
) -> Result<McEstimate, McError> {
    cfg.validate(q)?;
    let sampler = IncrementSampler::new(model, cfg.dt)?;
    let df = (-q * cfg.dt).exp();
    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    let [est] = run_paths(cfg, &sampler, |rng, smp| {
        let mut y = x;
        let mut acc = 0.0;
        if y < a {
            acc += a - y;
            y = a;
        }
        let mut disc = 1.0;
        for _ in 0..n_steps {
            y += smp.sample(rng);
            disc *= df;
            if y > b {
                break;
            }
            if y < a {
                acc += disc * (a - y);
                y = a;
            }
        }
        [acc]
    });
    Ok(est)
}

/// (s, S) impulse policy: whenever the state falls below s it is pushed up
/// to S at cost C_U * (S - position) + K, discounted; running cost f.
#[allow(clippy::too_many_arguments)]
pub fn npv_ss_policy(
    model: &LevyModel,
    q: f64,
    s: f64,
    big_s: f64,
    f: &dyn Fn(f64) -> f64,
    c_u: f64,
    k_cost: f64,
    x: f64,
    cfg: &SimConfig,
) -> Result<McEstimate, McError> {
    cfg.validate(q)?;
    if s >= big_s {
        return Err(McError::BadConfig(format!("need s < S, got s = {s}, S = {big_s}")));
    }
    let sampler = IncrementSampler::new(model, cfg.dt)?;
    let df = (-q * cfg.dt).exp();
    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    let [est] = run_paths(cfg, &sampler, |rng, smp| {
        let mut y = x;
        let mut acc = 0.0;
        if y < s {
            acc += c_u * (big_s - y) + k_cost;
            y = big_s;
        }
        let mut disc = 1.0;
        for _ in 0..n_steps {
            acc += disc * f(y) * cfg.dt;
            y += smp.sample(rng);
            disc *= df;
            if y < s {
                acc += disc * (c_u * (big_s - y) + k_cost);
                y = big_s;
            }
        }
        [acc]
    });
    Ok(est)
}

/// Terminal payoffs used to translate raw game paths into the transformed
/// payoff of the stopping game.
pub struct GameTransform<'a> {
    pub g_sup: &'a dyn Fn(f64) -> f64,
    pub g_inf: &'a dyn Fn(f64) -> f64,
}

pub struct GameMc {
    /// The contract value including premium flow and default payment.
    pub raw: McEstimate,
    /// The transformed payoff (terminal g's only), when payoffs supplied.
    pub transformed: Option<McEstimate>,
}

/// Simulate the cancellation game under threshold strategies: the inf
/// player stops at the first passage below `alpha`, the sup player above
/// `beta` (use `f64::INFINITY` for a never-stopping sup player); default
/// terminates the contract at the first passage below zero.
#[allow(clippy::too_many_arguments)]
pub fn game_payoff(
    model: &LevyModel,
    q: f64,
    premium: f64,
    gamma_sup: f64,
    gamma_inf: f64,
    alpha: f64,
    beta: f64,
    x: f64,
    transform: Option<&GameTransform>,
    cfg: &SimConfig,
) -> Result<GameMc, McError> {
    cfg.validate(q)?;
    if alpha < 0.0 || beta <= alpha {
        return Err(McError::BadConfig(format!("need 0 <= alpha < beta, got {alpha}, {beta}")));
    }
    let sampler = IncrementSampler::new(model, cfg.dt)?;
    let df = (-q * cfg.dt).exp();
    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    let body = |rng: &mut ChaCha8Rng, smp: &IncrementSampler| -> [f64; 2] {
        let mut y = x;
        if y <= 0.0 {
            return [1.0, 0.0]; // immediate default; g vanishes off (0, inf)
        }
        if y < alpha {
            let g = transform.map(|t| (t.g_inf)(y)).unwrap_or(0.0);
            return [gamma_inf, g];
        }
        if y > beta {
            let g = transform.map(|t| (t.g_sup)(y)).unwrap_or(0.0);
            return [-gamma_sup, g];
        }
        let mut disc = 1.0;
        let mut prem = 0.0;
        for _ in 0..n_steps {
            prem -= premium * disc * cfg.dt;
            y += smp.sample(rng);
            disc *= df;
            if y > beta {
                let g = transform.map(|t| disc * (t.g_sup)(y)).unwrap_or(0.0);
                return [prem - disc * gamma_sup, g];
            }
            if y < alpha {
                if y < 0.0 {
                    return [prem + disc, 0.0]; // default payment 1
                }
                let g = transform.map(|t| disc * (t.g_inf)(y)).unwrap_or(0.0);
                return [prem + disc * gamma_inf, g];
            }
        }
        [prem, 0.0]
    };
    let [raw, transformed] = run_paths(cfg, &sampler, body);
    Ok(GameMc { raw, transformed: transform.map(|_| transformed) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluct;
    use crate::model::{JumpSpec, JumpTerm};
    use crate::scale::{Backend, ScaleFamily};

    fn bm() -> LevyModel {
        LevyModel::brownian(1.0, 0.0)
    }

    fn hyper2() -> LevyModel {
        LevyModel::new(
            0.1,
            1.0,
            JumpSpec::hyperexponential(vec![
                JumpTerm { rate: 1.0, decay: 2.0 },
                JumpTerm { rate: 0.5, decay: 4.0 },
            ]),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_drift_without_noise() {
        let m = LevyModel::from_delta(1.5, JumpSpec::none()).unwrap();
        let mut rng = rng_for(7, 0);
        let dx = simulate_increment(&m, 0.1, &mut rng).unwrap();
        assert!((dx - 0.15).abs() < 1e-15);
    }

    #[test]
    fn increment_moments_match_psi_derivatives() {
        let m = hyper2();
        let dt = 0.05;
        let sampler = IncrementSampler::new(&m, dt).unwrap();
        let n = 200_000_u64;
        let mut rng = rng_for(11, 0);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = sampler.sample(&mut rng);
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let want_mean = m.psi_prime_zero() * dt;
        let want_var = m.variance_rate() * dt;
        let se_mean = (want_var / n as f64).sqrt();
        assert!((mean - want_mean).abs() < 4.0 * se_mean, "{mean} vs {want_mean}");
        // second-moment s.e. approximated by sqrt(2/n)*var scale
        let se_var = want_var * (2.0 / n as f64).sqrt() * 2.0;
        assert!((var - want_var).abs() < 4.0 * se_var, "{var} vs {want_var}");
    }

    #[test]
    fn determinism_same_seed_same_estimate() {
        let m = bm();
        let cfg = SimConfig { dt: 1e-2, t_max: 36.0, n_paths: 500, seed: 42, antithetic: false };
        let a = ruin_laplace_mc(&m, 0.5, 1.0, &cfg).unwrap();
        let b = ruin_laplace_mc(&m, 0.5, 1.0, &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn config_invariants_enforced() {
        let m = bm();
        let bad = SimConfig { dt: 1e-2, t_max: 10.0, n_paths: 10, seed: 1, antithetic: false };
        assert!(ruin_laplace_mc(&m, 0.5, 1.0, &bad).is_err()); // q*t_max < 18
        let bad2 = SimConfig { dt: 0.0, t_max: 36.0, n_paths: 10, seed: 1, antithetic: false };
        assert!(ruin_laplace_mc(&m, 0.5, 1.0, &bad2).is_err());
    }

    #[test]
    fn exit_laplace_matches_analytic_bm() {
        let m = bm();
        let fam = ScaleFamily::build(m.clone(), 0.5, Backend::PartialFraction).unwrap();
        let cfg = SimConfig { dt: 1e-3, t_max: 36.0, n_paths: 40_000, seed: 3, antithetic: true };
        let (up, down) = two_sided_exit(&m, 0.5, 0.0, 2.0, 1.0, &cfg).unwrap();
        let up_want = fluct::exit_up(&fam, 1.0, 2.0);
        let down_want = fluct::exit_down(&fam, 1.0, 2.0);
        assert!(up.agrees_with(up_want), "{} vs {up_want} (tol {})", up.mean, up.tolerance_against(up_want));
        assert!(down.agrees_with(down_want), "{} vs {down_want}", down.mean);
    }

    #[test]
    fn doubly_reflected_flows_match_identities() {
        let m = bm();
        let q = 0.5;
        let fam = ScaleFamily::build(m.clone(), q, Backend::PartialFraction).unwrap();
        let cfg = SimConfig { dt: 1e-3, t_max: 36.0, n_paths: 4_000, seed: 9, antithetic: true };
        let (u, d) = doubly_reflected_flows(&m, q, 0.0, 2.0, 1.0, &cfg).unwrap();
        let u_want = fluct::doubly_reflected(&fam, 0.0, 2.0, fluct::DoublyReflectedKind::LowerControlNpv, 1.0).unwrap();
        let d_want = fluct::doubly_reflected(&fam, 0.0, 2.0, fluct::DoublyReflectedKind::UpperControlNpv, 1.0).unwrap();
        assert!(u.agrees_with(u_want), "U {} vs {u_want} tol {}", u.mean, u.tolerance_against(u_want));
        assert!(d.agrees_with(d_want), "D {} vs {d_want} tol {}", d.mean, d.tolerance_against(d_want));
    }

    #[test]
    fn injection_matches_identity() {
        let m = hyper2();
        let q = 0.5;
        let fam = ScaleFamily::build(m.clone(), q, Backend::PartialFraction).unwrap();
        let cfg = SimConfig { dt: 1e-3, t_max: 36.0, n_paths: 6_000, seed: 17, antithetic: true };
        let got = reflected_lower_injection(&m, q, 0.0, 2.0, 0.8, &cfg).unwrap();
        let want = fluct::reflected_lower(&fam, 0.0, 2.0, fluct::ReflectedLowerKind::InjectionNpv, 0.8).unwrap();
        assert!(got.agrees_with(want), "{} vs {want} tol {}", got.mean, got.tolerance_against(want));
    }

    #[test]
    fn game_immediate_default_is_one() {
        let m = hyper2();
        let cfg = SimConfig { dt: 1e-2, t_max: 36.0, n_paths: 8, seed: 5, antithetic: false };
        let out = game_payoff(&m, 0.5, 0.1, 0.3, 0.1, 0.5, 2.0, -0.5, None, &cfg).unwrap();
        assert_eq!(out.raw.mean, 1.0);
        assert_eq!(out.raw.std_error, 0.0);
    }

    #[test]
    fn game_no_cancellation_reduces_to_cds_value() {
        // alpha = 0, beta = inf: the raw value is C(x;p) = (p/q+1) zeta - p/q.
        let m = hyper2();
        let q = 0.5;
        let p = 0.2;
        let fam = ScaleFamily::build(m.clone(), q, Backend::PartialFraction).unwrap();
        let cfg = SimConfig { dt: 1e-3, t_max: 36.0, n_paths: 30_000, seed: 23, antithetic: true };
        let out = game_payoff(&m, q, p, 0.3, 0.1, 0.0, f64::INFINITY, 1.0, None, &cfg).unwrap();
        let want = (p / q + 1.0) * fam.zeta(1.0) - p / q;
        assert!(out.raw.agrees_with(want), "{} vs {want} tol {}", out.raw.mean, out.raw.tolerance_against(want));
    }

    #[test]
    fn dt_refinement_reduces_error_monotonically() {
        // |estimate(dt) - analytic| nonincreasing across dt refinement on the
        // standard BM instance, with one-s.e. slack.
        let m = bm();
        let q = 0.5;
        let fam = ScaleFamily::build(m.clone(), q, Backend::PartialFraction).unwrap();
        let want = fluct::exit_up(&fam, 1.0, 2.0);
        let mut errs = Vec::new();
        let mut ses = Vec::new();
        for &dt in &[1e-2, 1e-3, 1e-4] {
            let cfg = SimConfig { dt, t_max: 36.0, n_paths: 20_000, seed: 31, antithetic: false };
            let (up, _) = two_sided_exit(&m, q, 0.0, 2.0, 1.0, &cfg).unwrap();
            errs.push((up.mean - want).abs());
            ses.push(up.std_error);
        }
        assert!(errs[1] <= errs[0] + ses[1], "{errs:?}");
        assert!(errs[2] <= errs[1] + ses[2], "{errs:?}");
    }

    #[test]
    fn unsupported_general_density() {
        use crate::model::GeneralDensity;
        use std::sync::Arc;
        let m = LevyModel::new(
            1.0,
            0.0,
            JumpSpec {
                terms: vec![],
                general: Some(GeneralDensity {
                    density: Arc::new(|z: f64| (z).exp()),
                    finite_variation: true,
                    finite_mean: true,
                }),
            },
        )
        .unwrap();
        let mut rng = rng_for(1, 0);
        assert!(simulate_increment(&m, 0.01, &mut rng).is_err());
    }
}

