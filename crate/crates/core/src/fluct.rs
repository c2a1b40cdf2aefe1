//! Fluctuation identities for exit, resolvent, reflected, and doubly
//! reflected functionals, plus a numerical generator applier for the
//! martingale and variational-inequality checks.

use crate::model::{LevyModel, VariationClass};
use crate::num::fd;
use crate::num::quad::{self, QuadError, QuadOpts};
use crate::num::poly::Side;
use crate::scale::{ScaleError, ScaleFamily};
use crate::tol;

#[derive(Debug, thiserror::Error)]
pub enum FluctError {
    #[error("barriers must satisfy a < b (got a = {a}, b = {b})")]
    BadBarriers { a: f64, b: f64 },
    #[error("starting point x = {x} must satisfy x <= b = {b}")]
    StartAboveUpper { x: f64, b: f64 },
    #[error("functional diverges: h grows at rate {growth} >= Phi(q) = {phi_q}")]
    Divergent { growth: f64, phi_q: f64 },
    #[error("jump integral did not converge")]
    JumpIntegral,
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// A payoff/cost density with its known kinks and an exponential growth
/// bound (used to decide integrability against the Phi(q) tail).
pub struct Hfn<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub breaks: &'a [f64],
    pub growth: f64,
}

impl<'a> Hfn<'a> {
    pub fn bounded(f: &'a dyn Fn(f64) -> f64) -> Self {
        Self { f, breaks: &[], growth: 0.0 }
    }
}

// ---- two-sided exit ---------------------------------------------------------

/// `E_x[e^{-q T_b^+}; T_b^+ < T_0^-]` for 0 < b, x <= b.
pub fn exit_up(fam: &ScaleFamily, x: f64, b: f64) -> f64 {
    fam.w(x) / fam.w(b)
}

/// `E_x[e^{-q T_0^-}; T_0^- < T_b^+]`.
pub fn exit_down(fam: &ScaleFamily, x: f64, b: f64) -> f64 {
    fam.z(x) - fam.z(b) * fam.w(x) / fam.w(b)
}

/// `zeta(x) = E_x[e^{-q T_0^-}] = Z(x) - q W(x)/Phi(q)`.
pub fn ruin_laplace(fam: &ScaleFamily, x: f64) -> f64 {
    fam.zeta(x)
}

// ---- resolvents -------------------------------------------------------------

pub enum ResolventRegion {
    /// Killed at exiting (a, b).
    Corridor { a: f64, b: f64 },
    /// Killed at down-crossing a.
    AboveKilled { a: f64 },
    /// No killing.
    Whole,
}

/// `E_x[int_0^horizon e^{-qt} h(X_t) dt]` for the three kill horizons.
pub fn resolvent(fam: &ScaleFamily, x: f64, region: ResolventRegion, h: &Hfn) -> Result<f64, FluctError> {
    match region {
        ResolventRegion::Corridor { a, b } => {
            if a >= b {
                return Err(FluctError::BadBarriers { a, b });
            }
            if x > b {
                return Err(FluctError::StartAboveUpper { x, b });
            }
            let ratio = fam.w(x - a) / fam.w(b - a);
            Ok(ratio * fam.phi_integral(a, b, h.f, h.breaks)? - fam.phi_integral(a, x, h.f, h.breaks)?)
        }
        ResolventRegion::AboveKilled { a } => {
            if h.growth >= fam.phi_q() {
                return Err(FluctError::Divergent { growth: h.growth, phi_q: fam.phi_q() });
            }
            let psi_a = fam.psi_integral(a, h.f, h.breaks, h.growth)?;
            Ok(psi_a * fam.w(x - a) - fam.phi_integral(a, x, h.f, h.breaks)?)
        }
        ResolventRegion::Whole => {
            if h.growth >= fam.phi_q() {
                return Err(FluctError::Divergent { growth: h.growth, phi_q: fam.phi_q() });
            }
            // density e^{Phi (x-y)}/psi'(Phi) - W(x-y): above x only the
            // exponential survives, below x it is the resolvent term r.
            let upper = fam.psi_integral(x, h.f, h.breaks, h.growth)? / fam.psi_prime_phi();
            let mut lower = 0.0;
            let mut t0 = 0.0;
            let mut span = 4.0 / fam.phi_q().max(0.25);
            for _ in 0..60 {
                let piece = {
                    let f = |t: f64| fam.resolvent_term(t) * (h.f)(x - t);
                    let cuts: Vec<f64> = h.breaks.iter().map(|&s| x - s).filter(|&t| t > t0 && t < t0 + span).collect();
                    quad::integrate_strict(&f, t0, t0 + span, &cuts, QuadOpts::default())?
                };
                lower += piece;
                t0 += span;
                span *= 2.0;
                let tail_scale = fam.resolvent_term(t0).abs() * (1.0 + (h.f)(x - t0).abs());
                if tail_scale < tol::TAIL_EPS * (1.0 + lower.abs()) {
                    return Ok(upper + lower);
                }
            }
            Err(FluctError::JumpIntegral)
        }
    }
}

/// Resolvent density of the running-infimum functional: for y > 0 the
/// density is `Theta(y)/Phi(q)`, with an atom `W(0)/Phi(q)` at y = 0.
pub fn inf_resolvent_density(fam: &ScaleFamily, y: f64) -> (f64, f64) {
    (fam.theta(y) / fam.phi_q(), fam.w_at_zero() / fam.phi_q())
}

// ---- reflected processes ----------------------------------------------------

pub enum ReflectedUpperKind<'a> {
    ExitLaplace,
    Resolvent(&'a Hfn<'a>),
    /// NPV of the reflection (dividend) flow at b.
    DividendNpv,
}

/// Functionals of the process reflected from above at `b`, killed at the
/// first down-crossing of `a`.
pub fn reflected_upper(fam: &ScaleFamily, a: f64, b: f64, kind: ReflectedUpperKind, x: f64) -> Result<f64, FluctError> {
    if a >= b {
        return Err(FluctError::BadBarriers { a, b });
    }
    if x > b {
        return Err(FluctError::StartAboveUpper { x, b });
    }
    let wp = fam.w_prime(b - a, Side::Right);
    match kind {
        ReflectedUpperKind::ExitLaplace => {
            Ok(fam.z(x - a) - fam.q() * fam.w(b - a) * fam.w(x - a) / wp)
        }
        ReflectedUpperKind::DividendNpv => Ok(fam.w(x - a) / wp),
        ReflectedUpperKind::Resolvent(h) => {
            let inner = {
                let f = |y: f64| (h.f)(y) * fam.w_prime(b - y, Side::Right);
                quad::integrate_strict(&f, a, b, h.breaks, QuadOpts::default())?
            };
            let bracket = fam.w_at_zero() * (h.f)(b) + inner;
            Ok(fam.w(x - a) / wp * bracket - fam.phi_integral(a, x, h.f, h.breaks)?)
        }
    }
}

pub enum ReflectedLowerKind<'a> {
    ExitLaplace,
    Resolvent(&'a Hfn<'a>),
    /// NPV of the injected reflection flow at a (needs psi'(0+) finite).
    InjectionNpv,
}

/// Functionals of the process reflected from below at `a`, killed at the
/// first up-crossing of `b`.
pub fn reflected_lower(fam: &ScaleFamily, a: f64, b: f64, kind: ReflectedLowerKind, x: f64) -> Result<f64, FluctError> {
    if a >= b {
        return Err(FluctError::BadBarriers { a, b });
    }
    if x > b {
        return Err(FluctError::StartAboveUpper { x, b });
    }
    match kind {
        ReflectedLowerKind::ExitLaplace => Ok(fam.z(x - a) / fam.z(b - a)),
        ReflectedLowerKind::Resolvent(h) => {
            let ratio = fam.z(x - a) / fam.z(b - a);
            Ok(ratio * fam.phi_integral(a, b, h.f, h.breaks)? - fam.phi_integral(a, x, h.f, h.breaks)?)
        }
        ReflectedLowerKind::InjectionNpv => {
            let r_x = fam.r_big(x - a)?;
            let r_b = fam.r_big(b - a)?;
            Ok(-r_x + fam.z(x - a) * r_b / fam.z(b - a))
        }
    }
}

pub enum DoublyReflectedKind<'a> {
    /// NPV of the upper reflection flow D (pushes down at b).
    UpperControlNpv,
    /// NPV of the lower reflection flow U (pushes up at a).
    LowerControlNpv,
    Resolvent(&'a Hfn<'a>),
}

/// Functionals of the doubly reflected process on `[a, b]` (no killing).
/// Starting points above `b` are reflected immediately; the upper-control
/// NPV then picks up the initial push `x - b`.
pub fn doubly_reflected(fam: &ScaleFamily, a: f64, b: f64, kind: DoublyReflectedKind, x: f64) -> Result<f64, FluctError> {
    if a >= b {
        return Err(FluctError::BadBarriers { a, b });
    }
    if x > b {
        let at_b = doubly_reflected(fam, a, b, kind, b)?;
        return Ok(match kind {
            DoublyReflectedKind::UpperControlNpv => (x - b) + at_b,
            _ => at_b,
        });
    }
    let denom = fam.q() * fam.w(b - a);
    match kind {
        DoublyReflectedKind::UpperControlNpv => Ok(fam.z(x - a) / denom),
        DoublyReflectedKind::LowerControlNpv => {
            let r_x = fam.r_big(x - a)?;
            Ok(-r_x + fam.z(b - a) * fam.z(x - a) / denom)
        }
        DoublyReflectedKind::Resolvent(h) => {
            let zr = fam.z(x - a) / denom;
            let inner = {
                let f = |y: f64| (h.f)(y) * (zr * fam.w_prime(b - y, Side::Right) - fam.w(x - y));
                let mut cuts: Vec<f64> = h.breaks.to_vec();
                cuts.push(x); // kink of W(x - y)
                quad::integrate_strict(&f, a, b, &cuts, QuadOpts::default())?
            };
            Ok(inner + (h.f)(b) * fam.z(x - a) * fam.w_at_zero() / denom)
        }
    }
}

impl<'a> Clone for DoublyReflectedKind<'a> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<'a> Copy for DoublyReflectedKind<'a> {}

// ---- generator --------------------------------------------------------------

/// Numerically apply `(L - q)` to `v` at `x`. Derivatives use five-point
/// stencils; the jump integral splits at the caller-supplied kinks of `v`
/// and truncates where the Levy tail contribution is negligible.
///
/// `x` should stay a few stencil widths away from the kinks.
pub fn apply_generator(
    model: &LevyModel,
    q: f64,
    v: &dyn Fn(f64) -> f64,
    kinks: &[f64],
    x: f64,
) -> Result<f64, FluctError> {
    let vx = v(x);
    let vp = fd::deriv1(v, x, fd::scaled_h1(x));
    let bounded = model.variation_class() == VariationClass::Bounded;

    let mut out = -q * vx;
    if bounded {
        out += model.delta().expect("bounded variation") * vp;
    } else {
        out += model.gamma() * vp;
        if model.sigma() > 0.0 {
            let vpp = fd::deriv2(v, x, fd::scaled_h2(x));
            out += 0.5 * model.sigma() * model.sigma() * vpp;
        }
    }

    if model.jumps().is_empty() {
        return Ok(out);
    }

    // Jump part over magnitudes u > 0: v(x-u) - v(x) (+ compensator).
    let integrand = |u: f64| {
        let mut val = v(x - u) - vx;
        if !bounded && u < 1.0 {
            val += vp * u;
        }
        val * model.nu_density_mag(u)
    };

    let mut cuts: Vec<f64> = kinks.iter().map(|&k| x - k).filter(|&u| u > 0.0).collect();
    if !bounded {
        cuts.push(1.0);
    }

    let mut total = 0.0;
    let mut u0 = 0.0;
    let mut span = 8.0;
    for _ in 0..40 {
        let seg: Vec<f64> = cuts.iter().copied().filter(|&u| u > u0 && u < u0 + span).collect();
        total += quad::integrate_strict(&integrand, u0, u0 + span, &seg, QuadOpts::default())?;
        u0 += span;
        span *= 2.0;
        let tail = model.nu_bar(u0) * (1.0 + vx.abs() + v(x - u0).abs() + vp.abs() * u0);
        if tail < 1e-11 * vx.abs().max(1.0) {
            return Ok(out + total);
        }
    }
    Err(FluctError::JumpIntegral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JumpSpec, JumpTerm};
    use crate::scale::Backend;

    fn bm(q: f64) -> ScaleFamily {
        ScaleFamily::build(LevyModel::brownian(1.0, 0.0), q, Backend::PartialFraction).unwrap()
    }

    fn cl(q: f64) -> ScaleFamily {
        let m = LevyModel::from_delta(
            1.5,
            JumpSpec::hyperexponential(vec![JumpTerm { rate: 1.0, decay: 1.0 }]),
        )
        .unwrap();
        ScaleFamily::build(m, q, Backend::PartialFraction).unwrap()
    }

    fn bm_jumps(q: f64) -> ScaleFamily {
        let m = LevyModel::new(
            0.0,
            1.0,
            JumpSpec::hyperexponential(vec![
                JumpTerm { rate: 2.0, decay: 1.0 },
                JumpTerm { rate: 0.5, decay: 3.0 },
            ]),
        )
        .unwrap();
        ScaleFamily::build(m, q, Backend::PartialFraction).unwrap()
    }

    #[test]
    fn exit_identities_trivial() {
        let fam = bm(0.5);
        assert!((exit_up(&fam, 2.0, 2.0) - 1.0).abs() < 1e-14);
        assert_eq!(exit_up(&fam, -0.5, 2.0), 0.0);
        // closed form for BM
        let w = |x: f64| x.exp() - (-x).exp();
        assert!((exit_up(&fam, 1.0, 2.0) - w(1.0) / w(2.0)).abs() < 1e-14);
        // probabilistic bounds at q > 0
        for &x in &[0.2, 1.0, 1.8] {
            let up = exit_up(&fam, x, 2.0);
            let down = exit_down(&fam, x, 2.0);
            assert!((0.0..=1.0).contains(&up));
            assert!((0.0..=1.0).contains(&down));
            assert!(up + down <= 1.0 + 1e-12);
        }
        assert!((ruin_laplace(&fam, -0.3) - 1.0).abs() < 1e-14);
        assert!(ruin_laplace(&fam, 1.0) > 0.0 && ruin_laplace(&fam, 1.0) < 1.0);
    }

    #[test]
    fn corridor_resolvent_against_exit_combination() {
        // h = 1: E int_0^exit e^{-qt} dt = (1 - E e^{-q exit})/q.
        for fam in [bm(0.5), cl(0.1), bm_jumps(0.5)] {
            let (a, b, x) = (-0.5, 2.0, 0.7);
            let got = resolvent(&fam, x, ResolventRegion::Corridor { a, b }, &Hfn::bounded(&|_| 1.0)).unwrap();
            let lt = exit_up(&fam, x - a, b - a) + exit_down(&fam, x - a, b - a);
            assert!((got - (1.0 - lt) / fam.q()).abs() < 1e-8, "got={got}");
        }
    }

    #[test]
    fn resolvent_h_zero_is_zero() {
        let fam = bm(0.5);
        let v = resolvent(&fam, 1.0, ResolventRegion::Corridor { a: 0.0, b: 2.0 }, &Hfn::bounded(&|_| 0.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn whole_resolvent_equals_above_killed_limit() {
        // With the kill barrier deep below the payoff support, AboveKilled
        // tends to Whole; the gap is the re-entry term O(e^{-Phi |a|}).
        let fam = bm_jumps(0.5);
        let h = |y: f64| (-(y * y)).exp();
        let whole = resolvent(&fam, 0.3, ResolventRegion::Whole, &Hfn::bounded(&h)).unwrap();
        let killed = resolvent(&fam, 0.3, ResolventRegion::AboveKilled { a: -12.0 }, &Hfn::bounded(&h)).unwrap();
        assert!((whole - killed).abs() < 1e-5, "whole={whole} killed={killed}");
    }

    #[test]
    fn divergent_growth_reported() {
        let fam = bm(0.5); // Phi(q) = 1
        let h = Hfn { f: &|y: f64| (2.0 * y).exp(), breaks: &[], growth: 2.0 };
        assert!(resolvent(&fam, 0.0, ResolventRegion::Whole, &h).is_err());
        assert!(resolvent(&fam, 0.0, ResolventRegion::AboveKilled { a: -1.0 }, &h).is_err());
    }

    #[test]
    fn inf_resolvent_total_mass() {
        // density + atom integrate to 1/q (total discounted time).
        for fam in [bm(0.5), cl(0.1)] {
            let hi = 40.0 / fam.phi_q();
            let dens = |y: f64| inf_resolvent_density(&fam, y).0;
            let total = quad::integrate_best(&dens, 1e-12, hi, &[]) + inf_resolvent_density(&fam, 0.0).1;
            let expect = 1.0 / fam.q();
            assert!(((total - expect) / expect).abs() < 1e-3, "{total} vs {expect}");
        }
        // atom vanishes for unbounded variation
        assert_eq!(inf_resolvent_density(&bm(0.5), 0.0).1, 0.0);
        // Cramer-Lundberg atom: W(0)/Phi = (1/1.5)/Phi
        let fam = cl(0.1);
        assert!(
            (inf_resolvent_density(&fam, 0.0).1 - (1.0 / 1.5) / fam.phi_q()).abs() < 1e-12
        );
    }

    #[test]
    fn reflected_upper_identities() {
        for fam in [bm(0.5), cl(0.1)] {
            let (a, b) = (0.0, 2.0);
            // immediate down-crossing region
            let v = reflected_upper(&fam, a, b, ReflectedUpperKind::ExitLaplace, -0.2).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
            // resolvent with h = 1 equals (1 - ExitLaplace)/q
            let x = 1.3;
            let res = reflected_upper(&fam, a, b, ReflectedUpperKind::Resolvent(&Hfn::bounded(&|_| 1.0)), x).unwrap();
            let lap = reflected_upper(&fam, a, b, ReflectedUpperKind::ExitLaplace, x).unwrap();
            assert!((res - (1.0 - lap) / fam.q()).abs() < 1e-8);
            // dividend NPV at x = a for the BV model is W(0)/W'((b-a)+)
            if fam.w_at_zero() > 0.0 {
                let d = reflected_upper(&fam, a, b, ReflectedUpperKind::DividendNpv, a).unwrap();
                assert!(d > 0.0);
                assert!((d - fam.w_at_zero() / fam.w_prime(b - a, Side::Right)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reflected_lower_identities() {
        for fam in [bm(0.5), cl(0.1)] {
            let (a, b) = (0.0, 2.0);
            let v = reflected_lower(&fam, a, b, ReflectedLowerKind::ExitLaplace, b).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
            let v = reflected_lower(&fam, a, b, ReflectedLowerKind::ExitLaplace, -1.0).unwrap();
            assert!((v - 1.0 / fam.z(b - a)).abs() < 1e-12);
            // h = 1 resolvent equals (1 - ExitLaplace)/q
            let x = 0.9;
            let res = reflected_lower(&fam, a, b, ReflectedLowerKind::Resolvent(&Hfn::bounded(&|_| 1.0)), x).unwrap();
            let lap = reflected_lower(&fam, a, b, ReflectedLowerKind::ExitLaplace, x).unwrap();
            assert!((res - (1.0 - lap) / fam.q()).abs() < 1e-8);
        }
    }

    #[test]
    fn doubly_reflected_identities() {
        for fam in [bm(0.5), cl(0.1), bm_jumps(0.5)] {
            let (a, b) = (0.0, 2.0);
            // total discounted time is 1/q (no killing)
            let res = doubly_reflected(&fam, a, b, DoublyReflectedKind::Resolvent(&Hfn::bounded(&|_| 1.0)), 1.0).unwrap();
            assert!((res - 1.0 / fam.q()).abs() < 1e-10, "res={res}");
            // upper NPV below a
            let v = doubly_reflected(&fam, a, b, DoublyReflectedKind::UpperControlNpv, -0.5).unwrap();
            assert!((v - 1.0 / (fam.q() * fam.w(b - a))).abs() < 1e-12);
            // immediate reflection above b
            let vb = doubly_reflected(&fam, a, b, DoublyReflectedKind::UpperControlNpv, b).unwrap();
            let v3 = doubly_reflected(&fam, a, b, DoublyReflectedKind::UpperControlNpv, b + 1.5).unwrap();
            assert!((v3 - vb - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn martingale_identities_generator() {
        // (L - q)Z = (L - q)R = (L - q)W = 0 above the shift point.
        for fam in [bm(0.5), cl(0.1), bm_jumps(0.5)] {
            let a = -0.4;
            let model = fam.model().clone();
            let q = fam.q();
            let z = |x: f64| fam.z(x - a);
            let r = |x: f64| fam.r_big(x - a).unwrap();
            let w = |x: f64| fam.w(x - a);
            for i in 0..20 {
                let x = a + 0.15 + 0.2 * i as f64;
                let gz = apply_generator(&model, q, &z, &[a], x).unwrap();
                assert!(gz.abs() < 1e-6, "Z x={x} gz={gz:.2e}");
                let gr = apply_generator(&model, q, &r, &[a], x).unwrap();
                assert!(gr.abs() < 1e-6, "R x={x} gr={gr:.2e}");
                let gw = apply_generator(&model, q, &w, &[a], x).unwrap();
                let scale = fam.w(x - a).max(1.0);
                assert!(gw.abs() < 1e-6 * scale, "W x={x} gw={gw:.2e}");
            }
        }
    }
}

