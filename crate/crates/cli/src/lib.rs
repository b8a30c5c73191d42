//! Batch front end for `eclqr-core`: JSON problem files in, CSV out.

pub mod commands;
pub mod output;
pub mod problem_file;

pub use commands::{cmd_simulate, cmd_solve, cmd_verify, exit, Failure};
pub use problem_file::{LoadError, ProblemFile};
