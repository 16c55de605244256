//! Bratu problem `-Lap u + theta e^u = phi` on the unit square or cube with a
//! manufactured solution.
//!
//! Unknowns are the interior grid values in lexicographic order (first axis
//! fastest). `phi` is built by applying the discrete operator to the sampled
//! solution, so that sample is an exact root of the discrete system. Boundary
//! values of the manufactured solution vanish.

use alloc::vec;
use alloc::vec::Vec;

use super::ProblemError;
use crate::problem::{EvalError, ResidualProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BratuDim {
    Two,
    Three,
}

impl BratuDim {
    fn axes(self) -> usize {
        match self {
            BratuDim::Two => 2,
            BratuDim::Three => 3,
        }
    }
}

/// `10 t1 t2 (1 - t1)(1 - t2) exp(t1^4.5)`
pub fn manufactured_2d(t1: f64, t2: f64) -> f64 {
    10.0 * t1 * t2 * (1.0 - t1) * (1.0 - t2) * libm::exp(libm::pow(t1, 4.5))
}

/// `10 t1 t2 t3 (1 - t1)(1 - t2)(1 - t3) exp(t1^4.5)`
pub fn manufactured_3d(t1: f64, t2: f64, t3: f64) -> f64 {
    10.0 * t1 * t2 * t3 * (1.0 - t1) * (1.0 - t2) * (1.0 - t3) * libm::exp(libm::pow(t1, 4.5))
}

#[derive(Debug, Clone)]
pub struct BratuProblem {
    dim_kind: BratuDim,
    n_p: usize,
    theta: f64,
    /// Interior points per axis, `n_p - 2`.
    m: usize,
    /// `1 / h^2 = (n_p - 1)^2`
    inv_h2: f64,
    rhs: Vec<f64>,
    exact: Vec<f64>,
}

pub fn bratu2d(n_p: usize, theta: f64) -> Result<BratuProblem, ProblemError> {
    BratuProblem::new(BratuDim::Two, n_p, theta)
}

pub fn bratu3d(n_p: usize, theta: f64) -> Result<BratuProblem, ProblemError> {
    BratuProblem::new(BratuDim::Three, n_p, theta)
}

impl BratuProblem {
    pub fn new(dim_kind: BratuDim, n_p: usize, theta: f64) -> Result<Self, ProblemError> {
        if n_p < 3 {
            return Err(ProblemError::GridTooSmall(n_p));
        }
        let m = n_p - 2;
        let h = 1.0 / (n_p - 1) as f64;
        let n = m.pow(dim_kind.axes() as u32);
        let mut p = BratuProblem {
            dim_kind,
            n_p,
            theta,
            m,
            inv_h2: ((n_p - 1) * (n_p - 1)) as f64,
            rhs: vec![0.0; n],
            exact: Vec::with_capacity(n),
        };
        for idx in 0..n {
            let c = p.grid_coords(idx);
            let t = |g: usize| g as f64 * h;
            p.exact.push(match dim_kind {
                BratuDim::Two => manufactured_2d(t(c[0]), t(c[1])),
                BratuDim::Three => manufactured_3d(t(c[0]), t(c[1]), t(c[2])),
            });
        }
        let mut rhs = vec![0.0; n];
        p.apply_operator(&p.exact, &mut rhs)
            .expect("manufactured solution is bounded");
        p.rhs = rhs;
        Ok(p)
    }

    pub fn kind(&self) -> BratuDim {
        self.dim_kind
    }

    pub fn grid_points(&self) -> usize {
        self.n_p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_p - 1) as f64
    }

    /// The right-hand side `phi` at interior points.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Grid indices (each in `1..=n_p-2`) of unknown `idx`; unused axes are 0.
    pub fn grid_coords(&self, idx: usize) -> [usize; 3] {
        let m = self.m;
        match self.dim_kind {
            BratuDim::Two => [idx % m + 1, idx / m + 1, 0],
            BratuDim::Three => [idx % m + 1, (idx / m) % m + 1, idx / (m * m) + 1],
        }
    }

    /// Unknown index of interior grid point `coords`.
    pub fn index_of(&self, coords: [usize; 3]) -> usize {
        let m = self.m;
        match self.dim_kind {
            BratuDim::Two => (coords[0] - 1) + (coords[1] - 1) * m,
            BratuDim::Three => (coords[0] - 1) + (coords[1] - 1) * m + (coords[2] - 1) * m * m,
        }
    }

    /// `out = -Lap_h u + theta e^u` with zero boundary values.
    fn apply_operator(&self, u: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let m = self.m;
        match self.dim_kind {
            BratuDim::Two => {
                for j in 0..m {
                    for i in 0..m {
                        let c = i + j * m;
                        let mut nb = 0.0;
                        if i > 0 {
                            nb += u[c - 1];
                        }
                        if i + 1 < m {
                            nb += u[c + 1];
                        }
                        if j > 0 {
                            nb += u[c - m];
                        }
                        if j + 1 < m {
                            nb += u[c + m];
                        }
                        out[c] = (4.0 * u[c] - nb) * self.inv_h2;
                    }
                }
            }
            BratuDim::Three => {
                let mm = m * m;
                for k in 0..m {
                    for j in 0..m {
                        for i in 0..m {
                            let c = i + j * m + k * mm;
                            let mut nb = 0.0;
                            if i > 0 {
                                nb += u[c - 1];
                            }
                            if i + 1 < m {
                                nb += u[c + 1];
                            }
                            if j > 0 {
                                nb += u[c - m];
                            }
                            if j + 1 < m {
                                nb += u[c + m];
                            }
                            if k > 0 {
                                nb += u[c - mm];
                            }
                            if k + 1 < m {
                                nb += u[c + mm];
                            }
                            out[c] = (6.0 * u[c] - nb) * self.inv_h2;
                        }
                    }
                }
            }
        }
        if self.theta != 0.0 {
            for (index, (o, ui)) in out.iter_mut().zip(u).enumerate() {
                let term = self.theta * libm::exp(*ui);
                if !term.is_finite() {
                    return Err(EvalError::Domain { index });
                }
                *o += term;
            }
        }
        Ok(())
    }
}

impl ResidualProblem for BratuProblem {
    fn dim(&self) -> usize {
        self.rhs.len()
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.apply_operator(x, out)?;
        for (o, r) in out.iter_mut().zip(&self.rhs) {
            *o -= r;
        }
        Ok(())
    }

    fn known_solution(&self) -> Option<&[f64]> {
        Some(&self.exact)
    }
}
