//! Problem abstraction, the built-in catalog, the slack transformation for
//! two-sided constraints and the noisy-gradient wrapper.

pub mod catalog;
mod noise;
mod problem;
mod slack;

pub use catalog::{build as catalog_build, catalog_list, CatalogEntry};
pub use noise::NoisyGradientWrapper;
pub use problem::{box_violation, project_to_box, GradientSource, MatOracle, Problem, VecOracle};
pub use slack::{add_slacks, GeneralProblem};
