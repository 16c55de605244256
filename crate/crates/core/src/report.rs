//! Solve outcomes and per-iteration trace records.

use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIterations,
    MaxFevals,
    LineSearchFailure,
    EvaluationError,
    /// Anderson Mixing blew up (`||F|| > 1e12 ||F(x^0)||`).
    Diverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::MaxFevals => "max_fevals",
            Status::LineSearchFailure => "line_search_failure",
            Status::EvaluationError => "evaluation_error",
            Status::Diverged => "diverged",
        }
    }

    /// Stopped because a budget ran out rather than because of a failure.
    pub fn is_budget(self) -> bool {
        matches!(self, Status::MaxIterations | Status::MaxFevals | Status::Diverged)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign of the accepted direction relative to `sigma v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionSign {
    /// `d = -sigma v`
    Negative,
    /// `d = +sigma v`
    Positive,
}

impl DirectionSign {
    pub fn as_char(self) -> char {
        match self {
            DirectionSign::Negative => '-',
            DirectionSign::Positive => '+',
        }
    }
}

/// Which candidate became the next iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Trial,
    Accelerated,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Trial => "trial",
            Branch::Accelerated => "accelerated",
        }
    }
}

/// How iterate `k` was produced from iterate `k - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub alpha: f64,
    pub sign: DirectionSign,
    pub branch: Branch,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub k: usize,
    pub residual_norm: f64,
    /// `0.5 * residual_norm^2`
    pub merit: f64,
    /// `None` for the starting point.
    pub step: Option<StepRecord>,
    pub cumulative_fevals: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub iterations: usize,
    /// Every call to the residual map, including rejected trials, probes and
    /// acceleration candidates.
    pub fevals: usize,
    pub final_residual_norm: f64,
    /// Last accepted iterate.
    pub x: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}
