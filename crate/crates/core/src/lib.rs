#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Stable numerical solvers for ill-posed linear evolution problems
//! (backward heat, convection with imaginary speed) by lifting them to a
//! unitary transport problem in an auxiliary variable p.

pub mod analysis;
pub mod config;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod expr;
pub mod grids;
pub mod lift_recover;
pub mod problems;
pub mod profiles;
pub mod propagators;
pub mod transforms;

pub use error::{Error, Result};
pub use num_complex::Complex64;
