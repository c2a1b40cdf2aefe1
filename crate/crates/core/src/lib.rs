//! Scale-function solvers for two-parameter stochastic control driven by
//! spectrally negative Levy processes.
//!
//! The library builds the q-scale function family of a model (analytically
//! by partial fractions for hyperexponential jumps, or by numerical Laplace
//! inversion), exposes the fluctuation identities for exit, reflected, and
//! doubly reflected processes, and solves three classes of two-parameter
//! problems on top of them:
//!
//! - two-sided singular control (double reflection at `(a*, b*)`),
//! - (s, S) impulse control with fixed plus proportional costs,
//! - a zero-sum cancellation game between two stoppers.
//!
//! Each solver pins its thresholds by continuous/smooth-fit conditions and
//! verifies the resulting candidate value function against the variational
//! inequalities and an independent Monte-Carlo oracle.

pub mod cli;
pub mod fluct;
pub mod game;
pub mod impulse;
pub mod mc;
pub mod model;
pub mod report;
pub mod num;
pub mod scale;
pub mod singular;
pub mod solve_common;
pub mod thresholds;
pub mod tol;

pub use model::{GeneralDensity, JumpSpec, JumpTerm, LevyModel, ModelError, VariationClass};
pub use num::poly::{PiecewisePoly, Side};
pub use scale::{Backend, ScaleFamily, ScaleError};
