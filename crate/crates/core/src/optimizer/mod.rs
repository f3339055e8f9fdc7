//! Bound- and inequality-constrained minimization of surrogate channels.

mod problem;
pub mod qn;
mod solve;

pub use problem::{
    Constraint, ConstraintValue, Direction, Evaluation, ProblemDefinition, ProblemFile, ResponseModel,
};
pub use solve::{
    compare_results, minimize, minimize_multistart, projected_gradient, OptimizationResult,
    OptimizationSpec, Status, Tolerances, DCA_STARTS, FULL_STARTS,
};
