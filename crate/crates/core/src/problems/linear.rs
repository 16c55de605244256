use alloc::vec::Vec;

use super::ProblemError;
use crate::problem::{EvalError, ResidualProblem};

/// Largest dense system accepted by [`linear_problem`].
pub const MAX_LINEAR_DIM: usize = 64;

/// `F(x) = A x - b` with dense row-major `A`.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    solution: Option<Vec<f64>>,
}

/// Builds `F(x) = A x - b` from row-major `a` (`n x n`) and `b`. The root is
/// computed by Gaussian elimination when `A` is nonsingular.
pub fn linear_problem(a: Vec<f64>, b: Vec<f64>) -> Result<LinearProblem, ProblemError> {
    let n = b.len();
    if n == 0 {
        return Err(ProblemError::Empty);
    }
    if n > MAX_LINEAR_DIM {
        return Err(ProblemError::TooLarge {
            max: MAX_LINEAR_DIM,
            got: n,
        });
    }
    if a.len() != n * n {
        return Err(ProblemError::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    let solution = dense_solve(n, &a, &b);
    Ok(LinearProblem { n, a, b, solution })
}

impl LinearProblem {
    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
}

impl ResidualProblem for LinearProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            *o = crate::linalg::dot(row, x) - self.b[i];
        }
        Ok(())
    }

    fn known_solution(&self) -> Option<&[f64]> {
        self.solution.as_deref()
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting; `None`
/// when a pivot vanishes relative to the largest entry of `A`.
pub fn dense_solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tiny = scale * f64::EPSILON * n as f64;
    for col in 0..n {
        let (piv, pval) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= tiny {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let factor = m[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[r * n + j] -= factor * m[col * n + j];
            }
            x[r] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= m[i * n + j] * x[j];
        }
        x[i] = acc / m[i * n + i];
    }
    Some(x)
}
