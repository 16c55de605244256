//! The residual-map contract and the evaluation counter the solvers use.

use thiserror::Error;

use crate::linalg;

/// Failure raised by a residual evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    /// The map is undefined at the requested point (e.g. `exp` overflow).
    #[error("residual undefined at component {index}")]
    Domain { index: usize },
    /// The map produced a NaN or infinite component.
    #[error("residual is not finite at component {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A nonlinear system `F(x) = 0` with `F: R^n -> R^n`.
///
/// `evaluate` must be deterministic and free of side effects: the same input
/// yields bitwise the same output. Implementations are shared by reference
/// across independent solves, so interior state must be thread-safe.
pub trait ResidualProblem {
    fn dim(&self) -> usize;

    /// Writes `F(x)` into `out`. Both slices have length [`dim`](Self::dim).
    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError>;

    /// A known root, when the problem was manufactured around one.
    fn known_solution(&self) -> Option<&[f64]> {
        None
    }
}

impl<P: ResidualProblem + ?Sized> ResidualProblem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        (**self).evaluate(x, out)
    }
    fn known_solution(&self) -> Option<&[f64]> {
        (**self).known_solution()
    }
}

/// Stored root of `problem`, if any.
pub fn exact_solution<P: ResidualProblem + ?Sized>(problem: &P) -> Option<&[f64]> {
    problem.known_solution()
}

/// Wraps a problem and counts every call to `evaluate`.
///
/// Non-finite outputs are turned into [`EvalError::NonFinite`] so that no
/// NaN or infinity enters solver state.
pub struct Evaluator<'a> {
    problem: &'a dyn ResidualProblem,
    count: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a dyn ResidualProblem) -> Self {
        Evaluator { problem, count: 0 }
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn eval(&mut self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.problem.dim();
        if x.len() != n || out.len() != n {
            return Err(EvalError::DimensionMismatch {
                expected: n,
                got: if x.len() != n { x.len() } else { out.len() },
            });
        }
        self.count += 1;
        self.problem.evaluate(x, out)?;
        match out.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(EvalError::NonFinite { index }),
            None => Ok(()),
        }
    }

    /// Evaluates into a fresh vector.
    pub fn eval_new(&mut self, x: &[f64]) -> Result<alloc::vec::Vec<f64>, EvalError> {
        let mut out = alloc::vec![0.0; self.problem.dim()];
        self.eval(x, &mut out)?;
        Ok(out)
    }
}

/// Half the squared Euclidean norm of a residual vector.
pub fn merit(residual: &[f64]) -> f64 {
    0.5 * linalg::norm2_sq(residual)
}
