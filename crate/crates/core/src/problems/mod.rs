//! Test and benchmark systems exposed through [`ResidualProblem`].
//!
//! [`ResidualProblem`]: crate::ResidualProblem

mod bratu;
mod linear;

use core::fmt;
use core::str::FromStr;

use thiserror::Error;

pub use bratu::{bratu2d, bratu3d, manufactured_2d, manufactured_3d, BratuDim, BratuProblem};
pub use linear::{dense_solve, linear_problem, LinearProblem, MAX_LINEAR_DIM};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("need at least 3 grid points per axis, got {0}")]
    GridTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dense problems are limited to n <= {max}, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("problem dimension must be positive")]
    Empty,
}

/// Problem families selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Bratu2d,
    Bratu3d,
    Linear,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Bratu2d => "bratu2d",
            ProblemKind::Bratu3d => "bratu3d",
            ProblemKind::Linear => "linear",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown problem `{0}` (expected bratu2d, bratu3d or linear)")]
pub struct UnknownProblem(pub alloc::string::String);

impl FromStr for ProblemKind {
    type Err = UnknownProblem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bratu2d" => Ok(ProblemKind::Bratu2d),
            "bratu3d" => Ok(ProblemKind::Bratu3d),
            "linear" => Ok(ProblemKind::Linear),
            other => Err(UnknownProblem(other.into())),
        }
    }
}
