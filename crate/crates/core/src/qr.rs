//! Updatable thin QR factorization of a tall `n x m` matrix `Y` (`m <= p << n`).
//!
//! The live factorization `Y = Q R` is unpivoted so that column append,
//! leftmost removal and rightmost replacement each cost `O(n m)`. Rank
//! decisions and rank-deficient solves go through a column-pivoted
//! re-factorization of the small triangle `R`, which costs `O(m^3)` and never
//! touches `n`-length data.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::config::SQRT_EPS;
use crate::dense::{self, SmallQr};
use crate::linalg;

/// Updates between unconditional orthogonality checks.
const DRIFT_CHECK_PERIOD: usize = 64;
/// A projected remainder that keeps less than this fraction of its norm is
/// projected again.
const REORTH_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QrError {
    #[error("column has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("factorization already holds {capacity} columns")]
    CapacityExceeded { capacity: usize },
    #[error("factorization has no columns")]
    Empty,
}

#[derive(Debug, Clone)]
pub struct UpdatableQr {
    n: usize,
    capacity: usize,
    /// Orthonormal columns, each of length `n`.
    q: Vec<Vec<f64>>,
    /// Row-major `capacity x capacity`; only the leading `m x m` upper
    /// triangle is meaningful, everything else is exactly zero.
    r: Vec<f64>,
    rank_tol: f64,
    cached_rank: usize,
    updates: usize,
}

impl UpdatableQr {
    /// Empty factorization of `n`-vectors holding at most `capacity` columns.
    /// The capacity is clamped to `n`, the largest column count with an
    /// orthonormal thin factor.
    pub fn new(n: usize, capacity: usize) -> Self {
        let capacity = capacity.min(n);
        UpdatableQr {
            n,
            capacity,
            q: Vec::with_capacity(capacity),
            r: vec![0.0; capacity * capacity],
            rank_tol: SQRT_EPS,
            cached_rank: 0,
            updates: 0,
        }
    }

    /// Factors the matrix whose columns are `cols`, in `O(n m^2)`.
    pub fn from_columns<C: AsRef<[f64]>>(n: usize, capacity: usize, cols: &[C]) -> Result<Self, QrError> {
        let mut qr = Self::new(n, capacity);
        for c in cols {
            qr.push_column(c.as_ref())?;
        }
        qr.refresh_rank();
        Ok(qr)
    }

    pub fn with_rank_tol(mut self, tol: f64) -> Self {
        self.rank_tol = tol;
        self.refresh_rank();
        self
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Length of each column.
    pub fn nrows(&self) -> usize {
        self.n
    }

    /// Number of stored columns.
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn q_column(&self, j: usize) -> &[f64] {
        &self.q[j]
    }

    /// Entry `(i, j)` of the triangular factor.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.capacity + j]
    }

    fn r_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.r[i * self.capacity + j]
    }

    /// Numerical rank of `Y` as of the last update.
    pub fn numerical_rank(&self) -> usize {
        self.cached_rank
    }

    pub fn append_column(&mut self, col: &[f64]) -> Result<(), QrError> {
        self.push_column(col)?;
        self.after_update();
        Ok(())
    }

    /// Drops the first column and re-triangularizes the resulting Hessenberg
    /// triangle with plane rotations.
    pub fn remove_leftmost(&mut self) -> Result<(), QrError> {
        let m = self.len();
        if m == 0 {
            return Err(QrError::Empty);
        }
        // Shift columns of R left by one.
        for i in 0..m {
            for j in 0..m - 1 {
                let v = self.r(i, j + 1);
                *self.r_mut(i, j) = v;
            }
            *self.r_mut(i, m - 1) = 0.0;
        }
        for j in 0..m - 1 {
            let a = self.r(j, j);
            let b = self.r(j + 1, j);
            let (c, s) = givens(a, b);
            if s == 0.0 && c == 1.0 {
                continue;
            }
            for col in j..m - 1 {
                let top = self.r(j, col);
                let bot = self.r(j + 1, col);
                *self.r_mut(j, col) = c * top + s * bot;
                *self.r_mut(j + 1, col) = -s * top + c * bot;
            }
            *self.r_mut(j + 1, j) = 0.0;
            let (left, right) = self.q.split_at_mut(j + 1);
            let qa = &mut left[j];
            let qb = &mut right[0];
            for (x, y) in qa.iter_mut().zip(qb.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = c * u + s * v;
                *y = -s * u + c * v;
            }
        }
        self.q.pop();
        for j in 0..m {
            *self.r_mut(m - 1, j) = 0.0;
        }
        self.after_update();
        Ok(())
    }

    /// Drops the last column. Exact: the leading columns of `R` do not depend
    /// on it.
    pub fn remove_rightmost(&mut self) -> Result<(), QrError> {
        self.truncate_last()?;
        self.after_update();
        Ok(())
    }

    /// Replaces the last column by `col`.
    pub fn replace_rightmost(&mut self, col: &[f64]) -> Result<(), QrError> {
        if col.len() != self.n {
            return Err(QrError::DimensionMismatch {
                expected: self.n,
                got: col.len(),
            });
        }
        self.truncate_last()?;
        self.push_column(col)?;
        self.after_update();
        Ok(())
    }

    /// Removes every column.
    pub fn clear(&mut self) {
        self.q.clear();
        self.r.iter_mut().for_each(|v| *v = 0.0);
        self.cached_rank = 0;
    }

    /// Minimum-norm least-squares solution of `Y w = rhs`.
    ///
    /// Full rank costs `O(n m + m^2)`; the rank-deficient path adds an
    /// `O(m^3)` complete orthogonal decomposition of `R`.
    pub fn min_norm_solve(&self, rhs: &[f64]) -> Result<Vec<f64>, QrError> {
        let m = self.len();
        if m == 0 {
            return Err(QrError::Empty);
        }
        if rhs.len() != self.n {
            return Err(QrError::DimensionMismatch {
                expected: self.n,
                got: rhs.len(),
            });
        }
        let mut c: Vec<f64> = self.q.iter().map(|qj| linalg::dot(qj, rhs)).collect();
        if self.cached_rank == m {
            dense::back_substitute(m, |i, j| self.r(i, j), &mut c);
            Ok(c)
        } else {
            Ok(dense::min_norm_solve_square(m, |i, j| self.r(i, j), &c, self.rank_tol).0)
        }
    }

    /// Columns of `Q R`, i.e. the matrix currently represented.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let m = self.len();
        (0..m)
            .map(|j| {
                let mut col = vec![0.0; self.n];
                for i in 0..=j {
                    linalg::axpy(self.r(i, j), &self.q[i], &mut col);
                }
                col
            })
            .collect()
    }

    /// `||Q^T Q - I||_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let m = self.len();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = linalg::dot(&self.q[i], &self.q[j]) - target;
                acc += d * d;
            }
        }
        libm::sqrt(acc)
    }

    fn truncate_last(&mut self) -> Result<(), QrError> {
        let m = self.len();
        if m == 0 {
            return Err(QrError::Empty);
        }
        self.q.pop();
        for i in 0..m {
            *self.r_mut(i, m - 1) = 0.0;
        }
        Ok(())
    }

    /// Appends without refreshing the rank.
    fn push_column(&mut self, col: &[f64]) -> Result<(), QrError> {
        if col.len() != self.n {
            return Err(QrError::DimensionMismatch {
                expected: self.n,
                got: col.len(),
            });
        }
        let m = self.len();
        if m == self.capacity {
            return Err(QrError::CapacityExceeded {
                capacity: self.capacity,
            });
        }
        let mut v = col.to_vec();
        let mut coeffs = vec![0.0; m];
        let mut prev = linalg::norm2(col);
        let mut rho = prev;
        let mut independent = true;
        if m > 0 && prev > 0.0 {
            let mut passes = 0;
            loop {
                self.project_out(&mut v, &mut coeffs);
                passes += 1;
                rho = linalg::norm2(&v);
                if rho >= REORTH_RATIO * prev {
                    break;
                }
                if rho == 0.0 || passes == 3 {
                    independent = false;
                    break;
                }
                prev = rho;
            }
        }
        let (qcol, diag) = if rho == 0.0 || !independent {
            // Remainder is numerically inside span(Q): take any unit vector
            // orthogonal to Q and keep whatever tiny component lies along it.
            let q = self.complement_vector();
            let d = linalg::dot(&q, &v);
            (q, d)
        } else {
            v.iter_mut().for_each(|x| *x /= rho);
            (v, rho)
        };
        for (i, c) in coeffs.iter().enumerate() {
            *self.r_mut(i, m) = *c;
        }
        *self.r_mut(m, m) = diag;
        self.q.push(qcol);
        Ok(())
    }

    /// `v -= Q (Q^T v)`, accumulating the projection coefficients.
    fn project_out(&self, v: &mut [f64], coeffs: &mut [f64]) {
        let c: Vec<f64> = self.q.iter().map(|qj| linalg::dot(qj, v)).collect();
        for (j, cj) in c.iter().enumerate() {
            linalg::axpy(-cj, &self.q[j], v);
            coeffs[j] += cj;
        }
    }

    /// Unit vector orthogonal to the current columns; requires `len() < n`.
    fn complement_vector(&self) -> Vec<f64> {
        // The coordinate axis least represented in span(Q) keeps at least
        // `1 - m/n` of its squared norm after projection.
        let mut row_weight = vec![0.0; self.n];
        for qj in &self.q {
            for (w, x) in row_weight.iter_mut().zip(qj) {
                *w += x * x;
            }
        }
        let axis = row_weight
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(core::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut e = vec![0.0; self.n];
        e[axis] = 1.0;
        let mut scratch = vec![0.0; self.len()];
        for _ in 0..2 {
            self.project_out(&mut e, &mut scratch);
            let nrm = linalg::norm2(&e);
            e.iter_mut().for_each(|x| *x /= nrm);
        }
        e
    }

    fn after_update(&mut self) {
        self.updates += 1;
        if self.updates.is_multiple_of(DRIFT_CHECK_PERIOD) {
            let m = self.len();
            if m > 0 && self.orthogonality_error() > 1e-12 * m as f64 {
                self.refactor();
            }
        }
        self.refresh_rank();
    }

    /// Rebuilds the factorization from the represented matrix.
    fn refactor(&mut self) {
        let cols = self.reconstruct();
        self.clear();
        for c in &cols {
            self.push_column(c).expect("refactor keeps dimensions and capacity");
        }
    }

    fn refresh_rank(&mut self) {
        let m = self.len();
        if m == 0 {
            self.cached_rank = 0;
            return;
        }
        let mut a = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..=j {
                a[j * m + i] = self.r(i, j);
            }
        }
        self.cached_rank = SmallQr::new(m, m, a, true).rank(self.rank_tol);
    }
}

/// Rotation `(c, s)` with `[c s; -s c] [a; b] = [r; 0]`.
fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0);
    }
    let r = libm::hypot(a, b);
    (a / r, b / r)
}
