//! Benchmark harness for `dfsane-core`: builds the Bratu and diagonal linear
//! test problems, runs one or many solver configurations, and writes JSON
//! reports and CSV tables/traces.
//!
//! The binary is a thin wrapper around [`cli::run`].

pub mod cli;
pub mod output;
pub mod runner;
pub mod spec;

pub use runner::{execute, execute_all, RunOutcome};
pub use spec::{Method, ProblemSpec, RunSpec, SpecError};
