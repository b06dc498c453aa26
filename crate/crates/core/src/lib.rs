//! Pseudo-spectral simulation of the derivative nonlinear Schrödinger
//! equation `i u_t + u_xx = λ ∂_x(|u|^{p-1} u)` on the torus `ℝ/2πℤ`, with
//! monitoring of the blowup functional, its lifespan bound, and the
//! conserved quantities of the problem.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod functionals;
pub mod solver;
pub mod verify;

pub use error::{DnlsError, Result};
pub use field::{random_zero_mean, random_zero_mean_jittered, Field, TorusGrid};
pub use functionals::ProblemParams;
pub use num_complex::Complex64;
pub use solver::{integrate, BlowupReport, SolverConfig, Trajectory};
