//! Numerical laboratory for the semilinear damped wave equation
//!
//! ```text
//! u_tt + u_t - Δu = |u|^p,   (u, u_t)(0) = (ε u0, ε u1)
//! ```
//!
//! on a periodic box standing in for ℝⁿ. The linear part is propagated exactly
//! through the Fourier multipliers of the fundamental solution; the
//! nonlinearity enters through a second-order exponential integrator of the
//! Duhamel formula.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod bump;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod norms;
pub mod profiles;
pub mod quad;
pub mod solver;
pub mod testfunc;

pub use error::{Error, Result};
pub use grid::{Grid, SpectralField};
pub use profiles::{DataPair, Family};
pub use solver::{PropagatorState, SimConfig, Trajectory};
