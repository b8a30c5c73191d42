use thiserror::Error;

use crate::graph::VarKey;

/// Failures of the dense elimination kernel. Column and variable indices are
/// positions inside the system handed to the kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("column {0} has no usable pivot (underdetermined)")]
    Underdetermined(usize),
    #[error("hard constraint row {0} reduced to 0 = nonzero (infeasible)")]
    Infeasible(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid weight or entry: {0}")]
    InvalidInput(String),
    #[error("variable {0} is needed before it has been solved")]
    MissingParent(usize),
    #[error("variable {0} was never solved")]
    Unresolved(usize),
}

/// Crate-level error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable {0} is underdetermined")]
    Underdetermined(VarKey),
    #[error("constraints are infeasible{}", .0.map(|k| format!(" (detected at {k})")).unwrap_or_default())]
    Infeasible(Option<VarKey>),
    #[error("unknown variable {0}")]
    UnknownVariable(VarKey),
    #[error("variable {0} is needed before it has been solved")]
    MissingParent(VarKey),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid cost: {0}")]
    InvalidCost(String),
    #[error("invalid elimination ordering: {0}")]
    InvalidOrdering(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("gain system at t={0} is not positive definite")]
    SingularGainSolve(usize),
    #[error("KKT system is singular (problem unbounded or degenerate)")]
    SingularKkt,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
