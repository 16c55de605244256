//! Householder QR with optional column pivoting for the small `m x m`
//! triangles produced by [`UpdatableQr`](crate::qr::UpdatableQr).
//!
//! Storage is column-major. Reflectors are kept below the diagonal in the
//! LAPACK convention (`v[0] = 1` implicit).

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;

pub(crate) struct SmallQr {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    tau: Vec<f64>,
    /// `perm[k]` is the original index of the column at position `k`.
    perm: Vec<usize>,
}

impl SmallQr {
    /// Factors `a` (column-major `rows x cols`, `rows >= cols`).
    pub(crate) fn new(rows: usize, cols: usize, mut a: Vec<f64>, pivot: bool) -> Self {
        debug_assert_eq!(a.len(), rows * cols);
        debug_assert!(rows >= cols);
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut tau = vec![0.0; cols];
        for k in 0..cols {
            if pivot {
                let mut best = k;
                let mut best_norm = -1.0;
                for j in k..cols {
                    let nrm = linalg::norm2(&a[j * rows + k..(j + 1) * rows]);
                    if nrm > best_norm {
                        best_norm = nrm;
                        best = j;
                    }
                }
                if best != k {
                    for i in 0..rows {
                        a.swap(k * rows + i, best * rows + i);
                    }
                    perm.swap(k, best);
                }
            }
            let col = &mut a[k * rows + k..(k + 1) * rows];
            let alpha = col[0];
            let tail = linalg::norm2(&col[1..]);
            if tail == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let norm = libm::hypot(alpha, tail);
            let beta = if alpha >= 0.0 { -norm } else { norm };
            tau[k] = (beta - alpha) / beta;
            let scale = 1.0 / (alpha - beta);
            for v in col[1..].iter_mut() {
                *v *= scale;
            }
            col[0] = beta;
            for j in k + 1..cols {
                let (left, right) = a.split_at_mut(j * rows);
                let v = &left[k * rows + k..(k + 1) * rows];
                let target = &mut right[k..rows];
                apply_reflector(v, tau[k], target);
            }
        }
        SmallQr {
            rows,
            cols,
            a,
            tau,
            perm,
        }
    }

    /// Entry `(i, j)` of the triangular factor, `i <= j`.
    pub(crate) fn r(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.a[j * self.rows + i]
        }
    }

    pub(crate) fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// `v <- Q^T v` for `v` of length `rows`.
    pub(crate) fn apply_qt(&self, v: &mut [f64]) {
        for k in 0..self.cols {
            let refl = &self.a[k * self.rows + k..(k + 1) * self.rows];
            apply_reflector(refl, self.tau[k], &mut v[k..]);
        }
    }

    /// `v <- Q v` for `v` of length `rows`.
    pub(crate) fn apply_q(&self, v: &mut [f64]) {
        for k in (0..self.cols).rev() {
            let refl = &self.a[k * self.rows + k..(k + 1) * self.rows];
            apply_reflector(refl, self.tau[k], &mut v[k..]);
        }
    }

    /// Number of leading diagonal entries with `|r_kk| > tol * |r_00|`.
    pub(crate) fn rank(&self, tol: f64) -> usize {
        let lead = self.r(0, 0).abs();
        if self.cols == 0 || lead == 0.0 || !lead.is_finite() {
            return 0;
        }
        (0..self.cols)
            .take_while(|&k| self.r(k, k).abs() > tol * lead)
            .count()
    }
}

/// `target <- (I - tau v v^T) target` with `v[0] = 1` implied.
fn apply_reflector(v: &[f64], tau: f64, target: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let mut w = target[0];
    for (vi, ti) in v[1..].iter().zip(&target[1..]) {
        w += vi * ti;
    }
    w *= tau;
    target[0] -= w;
    for (vi, ti) in v[1..].iter().zip(target[1..].iter_mut()) {
        *ti -= w * vi;
    }
}

/// Solves `R x = b` for upper-triangular `R` given by `r(i, j)`.
pub(crate) fn back_substitute(size: usize, r: impl Fn(usize, usize) -> f64, b: &mut [f64]) {
    for i in (0..size).rev() {
        let mut acc = b[i];
        for j in i + 1..size {
            acc -= r(i, j) * b[j];
        }
        b[i] = acc / r(i, i);
    }
}

/// Minimum-norm least-squares solution of the `m x m` system `R x = c`
/// through a complete orthogonal decomposition of the column-pivoted `R`.
///
/// `rank` leading pivots are kept; the trailing block is treated as zero.
pub(crate) fn min_norm_solve_square(
    m: usize,
    r: impl Fn(usize, usize) -> f64,
    c: &[f64],
    tol: f64,
) -> (Vec<f64>, usize) {
    let mut a = vec![0.0; m * m];
    for j in 0..m {
        for i in 0..=j {
            a[j * m + i] = r(i, j);
        }
    }
    let pqr = SmallQr::new(m, m, a, true);
    let rank = pqr.rank(tol);
    let mut x = vec![0.0; m];
    if rank == 0 {
        return (x, 0);
    }
    let mut rhs = c.to_vec();
    pqr.apply_qt(&mut rhs);
    // T1 = leading `rank` rows of the pivoted triangle; factor T1^T = W L.
    let mut t1t = vec![0.0; m * rank];
    for i in 0..rank {
        for j in i..m {
            t1t[i * m + j] = pqr.r(i, j);
        }
    }
    let w = SmallQr::new(m, rank, t1t, false);
    // T1 = L^T W^T, so z = W (L^T)^{-1} b.
    let mut t = vec![0.0; m];
    for i in 0..rank {
        let mut acc = rhs[i];
        for j in 0..i {
            acc -= w.r(j, i) * t[j];
        }
        t[i] = acc / w.r(i, i);
    }
    w.apply_q(&mut t);
    for (k, &orig) in pqr.perm().iter().enumerate() {
        x[orig] = t[k];
    }
    (x, rank)
}
