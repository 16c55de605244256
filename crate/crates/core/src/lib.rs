//! Derivative-free solvers for square nonlinear systems `F(x) = 0`.
//!
//! The driver is a sequential residual method: the residual itself (scaled by
//! `sigma`) is the search direction, globalized by a nonmonotone double
//! backtracking line search on `f(x) = ||F(x)||^2 / 2`. The trial point can be
//! replaced by a limited-memory sequential secant point computed from the last
//! `p` increments, which is what makes the method competitive on large
//! discretized PDEs. Plain DF-SANE and Anderson Mixing are available as
//! baselines.
//!
//! The crate is `no_std` (with `alloc`); timing and IO live in the companion
//! bench crate.
//!
//! ```
//! use dfsane_core::{problems, solve, ResidualProblem, SolverConfig};
//!
//! let problem = problems::bratu3d(6, -100.0).unwrap();
//! let mut cfg = SolverConfig::accelerated();
//! cfg.h_init = 1.0;
//! cfg.h_small = 0.1;
//! cfg.h_large = 0.1;
//! cfg.eps = 1e-6 * (problem.dim() as f64).sqrt();
//! let report = solve(&problem, &vec![0.0; problem.dim()], &cfg).unwrap();
//! assert!(report.converged());
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod config;
mod dense;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod qr;
pub mod report;
pub mod residual;
pub mod secant;

pub use config::{AccelMode, ConfigError, RandomSafeguard, SigmaStrategy, SolverConfig};
pub use problem::{exact_solution, merit, EvalError, Evaluator, ResidualProblem};
pub use qr::{QrError, UpdatableQr};
pub use report::{Branch, DirectionSign, SolveReport, Status, StepRecord, TraceEntry};
pub use residual::{solve, Solver};
pub use secant::{
    anderson_step, AccelDecision, Accelerator, MemoryAction, NoAcceleration, SecantAccelerator, SecantMemory,
};
