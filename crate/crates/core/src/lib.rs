//! Numerical laboratory for the derivative nonlinear Schrödinger equation
//!
//! ```text
//! i u_t + u_xx + i |u|^2 u_x = 0
//! ```
//!
//! on a periodic box that stands in for the real line. The crate provides
//! closed-form solitary waves and their invariants, the gauge, scaling and
//! Galilean symmetries, the conserved and localized functionals, an
//! exponential Runge–Kutta evolver, the modulation fit, and a dense
//! discretization of the linearized action operator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolver;
pub mod functionals;
pub mod gauge;
pub mod grid;
pub mod linearized;
pub mod modulation;
pub mod solitons;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec};
pub use num_complex::Complex64;
pub use solitons::{MultiSolitonConfig, SolitonParams};
