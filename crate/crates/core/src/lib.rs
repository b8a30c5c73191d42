//! Equality-constrained LQR solved by variable elimination on constrained
//! Gaussian factor graphs.
//!
//! The layers build on each other:
//!
//! * [`linalg`]: the mixed hard/soft row elimination kernel (constrained
//!   modified Gram-Schmidt) and back-substitution.
//! * [`graph`]: factors, factor graphs, elimination into a Bayes net.
//! * [`eclqr`]: problem description, graph construction, solve, policies,
//!   rollout and evaluation.
//! * [`oracles`]: Riccati recursion and a dense KKT solver used as ground truth.
//!
//! ```
//! use eclqr_core::{scenarios, solve};
//!
//! let sol = solve(&scenarios::lqr_toy()).unwrap();
//! assert!((sol.us[0][0] + 0.5).abs() < 1e-12);
//! ```

pub mod eclqr;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod oracles;
pub mod random;
pub mod scenarios;

pub use eclqr::{
    build_graph, default_ordering, evaluate, rollout, solve, ConstraintToGo, CrossConstraint,
    CrossTerm, EcLqrProblem, LocalConstraint, Policy, Solution, ValueRecord,
};
pub use error::{Error, LinalgError, Result};
pub use graph::{BayesNet, Conditional, Factor, FactorGraph, FactorKind, VarKey, VarKind};
pub use linalg::{Mat, RowWeight, Vector, WeightedSystem};
