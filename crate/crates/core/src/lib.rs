#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Objective-function-free adaptive solver for problems with equality
//! constraints and simple bounds, using only gradient, constraint and
//! Jacobian evaluations.

pub mod bench;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod model;
pub mod steps;
pub mod subproblems;

pub use driver::{solve, RunResult, RunStatus, SolverConfig};
pub use error::{AdicError, Result};
pub use model::{GradientSource, NoisyGradientWrapper, Problem};
pub use steps::Variant;
