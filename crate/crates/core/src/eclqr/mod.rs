//! Equality-constrained LQR on top of the factor-graph machinery.

mod problem;
mod solver;

pub use problem::{CrossConstraint, CrossTerm, EcLqrProblem, LocalConstraint};
pub use solver::{
    build_graph, default_ordering, evaluate, rollout, solve, ConstraintToGo, Policy, Solution,
    ValueRecord,
};
