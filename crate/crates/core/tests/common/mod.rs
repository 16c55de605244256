//! Shared helpers for the integration tests: random data, a Jacobi-SVD
//! pseudoinverse oracle, and a few toy residual maps.
#![allow(dead_code)]

use std::cell::Cell;

use dfsane_core::{EvalError, ResidualProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frobenius(cols: &[Vec<f64>]) -> f64 {
    cols.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// One-sided Jacobi SVD of the `n x m` matrix with columns `cols`:
/// returns `(u_scaled, v)` with `Y V = U_scaled` and mutually orthogonal
/// columns of `U_scaled`; their norms are the singular values.
fn jacobi_svd(cols: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = cols.len();
    let mut u: Vec<Vec<f64>> = cols.to_vec();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..m).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(a, b)| a * b).sum();
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    let (lo, hi) = mat.split_at_mut(q);
                    for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (x, y) = (*a, *b);
                        *a = c * x - s * y;
                        *b = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (u, v)
}

pub fn singular_values(cols: &[Vec<f64>]) -> Vec<f64> {
    jacobi_svd(cols).0.iter().map(|c| norm(c)).collect()
}

/// Minimum-norm least-squares solution through the SVD pseudoinverse.
/// Singular values below `rel_tol * sigma_max` are treated as zero.
pub fn pinv_solve(_n: usize, cols: &[Vec<f64>], rhs: &[f64], rel_tol: f64) -> Vec<f64> {
    let (u, v) = jacobi_svd(cols);
    let sv: Vec<f64> = u.iter().map(|c| norm(c)).collect();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let mut w = vec![0.0; cols.len()];
    for j in 0..cols.len() {
        if sv[j] > rel_tol * smax && sv[j] > 0.0 {
            let coef = u[j].iter().zip(rhs).map(|(a, b)| a * b).sum::<f64>() / (sv[j] * sv[j]);
            for (wi, vi) in w.iter_mut().zip(&v[j]) {
                *wi += coef * vi;
            }
        }
    }
    w
}

/// Numerical rank from the SVD with a relative threshold.
pub fn svd_rank(_n: usize, cols: &[Vec<f64>], rel_tol: f64) -> usize {
    let sv = singular_values(cols);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// `A` with `A = I + scale * G / sqrt(n)`, `G` standard normal; for
/// `scale < 1` the singular values stay within roughly `[1 - 2 scale, 1 + 2 scale]`.
pub fn well_conditioned(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    let g = gaussian(rng, n * n);
    let s = scale / (n as f64).sqrt();
    (0..n * n)
        .map(|idx| if idx / n == idx % n { 1.0 } else { 0.0 } + s * g[idx])
        .collect()
}

pub fn matvec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

/// `F(x) = A x + c * tanh(x) - b`, a mildly nonlinear random system.
pub struct TanhSystem {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl TanhSystem {
    pub fn random(rng: &mut impl Rng, n: usize, c: f64) -> Self {
        let a = well_conditioned(rng, n, 0.4);
        let b = gaussian(rng, n);
        TanhSystem { n, a, b, c }
    }
}

impl ResidualProblem for TanhSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let ax = matvec(self.n, &self.a, x);
        for i in 0..self.n {
            out[i] = ax[i] + self.c * x[i].tanh() - self.b[i];
        }
        Ok(())
    }
}

/// Wraps a problem and counts every call to `evaluate`.
pub struct Counting<P> {
    pub inner: P,
    pub calls: Cell<usize>,
}

impl<P> Counting<P> {
    pub fn new(inner: P) -> Self {
        Counting { inner, calls: Cell::new(0) }
    }
}

impl<P: ResidualProblem> ResidualProblem for Counting<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.calls.set(self.calls.get() + 1);
        self.inner.evaluate(x, out)
    }
}

/// Runs `ops` random updates on an `n`-row factorization with capacity `p`
/// and checks every state against an explicit copy of the columns. Returns
/// the first violation found.
pub fn qr_update_sequence(seed: u64, n: usize, p: usize, ops: usize) -> Result<(), String> {
    use dfsane_core::UpdatableQr;

    let mut rng = rng(seed);
    let mut qr = UpdatableQr::new(n, p);
    let p = qr.capacity();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut deficient_seen = false;

    for op in 0..ops {
        let before_rank = qr.numerical_rank();
        let choice: f64 = rng.random();
        let kind;
        if cols.is_empty() || (cols.len() < p && choice < 0.5) {
            let col = random_column(&mut rng, n, &cols);
            qr.append_column(&col).map_err(|e| format!("op {op}: append: {e}"))?;
            cols.push(col);
            kind = "append";
        } else if choice < 0.7 {
            qr.remove_leftmost().map_err(|e| format!("op {op}: {e}"))?;
            cols.remove(0);
            kind = "remove_leftmost";
        } else if choice < 0.85 {
            qr.remove_rightmost().map_err(|e| format!("op {op}: {e}"))?;
            cols.pop();
            kind = "remove_rightmost";
        } else {
            let others = &cols[..cols.len() - 1];
            let col = random_column(&mut rng, n, others);
            qr.replace_rightmost(&col).map_err(|e| format!("op {op}: {e}"))?;
            *cols.last_mut().unwrap() = col;
            kind = "replace_rightmost";
        }

        if qr.len() != cols.len() {
            return Err(format!("op {op} ({kind}): len {} vs {}", qr.len(), cols.len()));
        }
        let scale = frobenius(&cols).max(1.0);
        let rebuilt = qr.reconstruct();
        let mut err = 0.0;
        for (a, b) in rebuilt.iter().zip(&cols) {
            for (x, y) in a.iter().zip(b) {
                err += (x - y) * (x - y);
            }
        }
        let err = err.sqrt();
        if err > 1e-12 * scale {
            return Err(format!("op {op} ({kind}): reconstruction error {err:e} (scale {scale:e})"));
        }
        let orth = qr.orthogonality_error();
        if orth > 1e-12 * (p as f64) {
            return Err(format!("op {op} ({kind}): orthogonality error {orth:e}"));
        }

        let rank = qr.numerical_rank();
        let oracle_rank = svd_rank(n, &cols, 1e-10);
        if rank != oracle_rank {
            return Err(format!("op {op} ({kind}): rank {rank} vs svd rank {oracle_rank}"));
        }
        match kind {
            "append" if rank < before_rank => {
                return Err(format!("op {op}: rank fell from {before_rank} to {rank} on append"))
            }
            "remove_leftmost" | "remove_rightmost" if rank > before_rank => {
                return Err(format!("op {op}: rank rose from {before_rank} to {rank} on removal"))
            }
            _ => {}
        }
        deficient_seen |= rank < cols.len();

        if !cols.is_empty() {
            let rhs = gaussian(&mut rng, n);
            let w = qr.min_norm_solve(&rhs).map_err(|e| format!("op {op}: solve: {e}"))?;
            let w_ref = pinv_solve(n, &cols, &rhs, 1e-10);
            let diff: f64 = w.iter().zip(&w_ref).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if diff > 1e-8 * norm(&w_ref).max(1.0) {
                return Err(format!(
                    "op {op} ({kind}): solve differs from pseudoinverse by {diff:e} (|w| = {:e}, rank {rank}/{})",
                    norm(&w_ref),
                    cols.len()
                ));
            }
        }
    }
    if !deficient_seen {
        return Err("sequence never produced a rank-deficient state".into());
    }
    Ok(())
}

/// Fresh Gaussian, a duplicate, a combination of two existing columns, or a
/// rescaled Gaussian.
fn random_column(rng: &mut impl Rng, n: usize, existing: &[Vec<f64>]) -> Vec<f64> {
    let r: f64 = rng.random();
    if !existing.is_empty() && r < 0.2 {
        existing[rng.random_range(0..existing.len())].clone()
    } else if existing.len() >= 2 && r < 0.35 {
        let i = rng.random_range(0..existing.len());
        let j = rng.random_range(0..existing.len());
        let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        existing[i].iter().zip(&existing[j]).map(|(x, y)| a * x + b * y).collect()
    } else if r < 0.45 {
        let e: i32 = rng.random_range(-3..=3);
        gaussian(rng, n).into_iter().map(|x| x * 10f64.powi(e)).collect()
    } else {
        gaussian(rng, n)
    }
}

/// Solves one random small system and re-checks every accepted step from
/// scratch: the nonmonotone sufficient-decrease inequality with both sides
/// re-evaluated, the reference value and forcing term recomputed from the
/// history, `f(x^{k+1}) <= f(trial)`, `||v|| = ||F||`, and the sigma bounds.
/// Returns the number of checked steps.
pub fn line_search_invariants(seed: u64) -> Result<usize, String> {
    use dfsane_core::residual::StepEvent;
    use dfsane_core::{merit, RandomSafeguard, Solver, SolverConfig};

    let mut rng = rng(seed);
    let n = rng.random_range(1..=10);
    let c = rng.random_range(0.0..3.0);
    let problem = TanhSystem::random(&mut rng, n, c);
    let mut cfg = match seed % 3 {
        0 => SolverConfig::accelerated(),
        1 => SolverConfig::dfsane(),
        _ => {
            let mut cfg = SolverConfig::accelerated();
            cfg.random_safeguard = RandomSafeguard::On { alpha_small: 0.5, seed };
            cfg
        }
    };
    cfg.memory = rng.random_range(1..=10);
    cfg.depth = rng.random_range(1..=6);
    cfg.eps = 1e-10;
    cfg.max_iters = 300;
    let x0: Vec<f64> = gaussian(&mut rng, n).into_iter().map(|v| 3.0 * v).collect();

    let mut history: Vec<f64> = Vec::new();
    let mut f0_norm = None;
    let mut violations: Vec<String> = Vec::new();
    let mut steps = 0usize;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let mut check = |ev: &StepEvent<'_>| {
        steps += 1;
        let mut fx = vec![0.0; n];
        problem.evaluate(ev.x, &mut fx).unwrap();
        let f_x = merit(&fx);
        let fnorm = norm(&fx);
        let f0 = *f0_norm.get_or_insert(fnorm);
        history.push(f_x);
        let window = &history[history.len().saturating_sub(cfg.memory)..];
        let fbar = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eta = 0.5f64.powi(ev.k as i32) * (0.5 * f0).min(f0.sqrt());

        let mut bad = |what: String| violations.push(format!("seed {seed} k {}: {what}", ev.k));
        if fx != ev.f {
            bad("reported F(x^k) differs from re-evaluation".into());
        }
        if (fbar - ev.fbar).abs() > 1e-15 * fbar.abs() {
            bad(format!("reference {} vs recomputed {}", ev.fbar, fbar));
        }
        if (eta - ev.eta).abs() > 1e-14 * eta {
            bad(format!("eta {} vs {}", ev.eta, eta));
        }
        let trial_expected: Vec<f64> = ev.x.iter().zip(ev.direction).map(|(x, d)| x + ev.alpha * d).collect();
        let dist: f64 = trial_expected.iter().zip(ev.x_trial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dist > 1e-14 * (1.0 + norm(ev.x_trial)) {
            bad(format!("trial point is not x + alpha d (off by {dist:e})"));
        }
        let mut ft = vec![0.0; n];
        problem.evaluate(ev.x_trial, &mut ft).unwrap();
        let f_trial = merit(&ft);
        if !(f_trial <= fbar + eta - cfg.gamma * ev.alpha * ev.alpha * f_x) {
            bad(format!("sufficient decrease fails: {f_trial:e} > {fbar:e} + {eta:e} - ..."));
        }
        let mut fn_ = vec![0.0; n];
        problem.evaluate(ev.x_next, &mut fn_).unwrap();
        if !(merit(&fn_) <= f_trial) {
            bad(format!("next merit {} exceeds trial merit {}", merit(&fn_), f_trial));
        }
        let vnorm = norm(ev.v);
        if (vnorm - fnorm).abs() > 1e-12 * fnorm {
            bad(format!("|v| = {vnorm} but |F| = {fnorm}"));
        }
        let s = ev.sigma.abs();
        if !(s >= cfg.sigma_min && s <= cfg.sigma_max) {
            bad(format!("|sigma| = {s:e} outside [{:e}, {:e}]", cfg.sigma_min, cfg.sigma_max));
        }
        let dnorm = norm(ev.direction);
        if (dnorm - s * vnorm).abs() > 1e-12 * (1.0 + dnorm) {
            bad("direction is not +-sigma v".into());
        }
    };
    let report = Solver::new(&cfg)
        .observer(&mut check)
        .run(&problem, &x0)
        .map_err(|e| format!("seed {seed}: {e}"))?;
    if let Some(v) = violations.first() {
        return Err(format!("{} violations, first: {v}", violations.len()));
    }
    if report.iterations != steps {
        return Err(format!("seed {seed}: {} iterations but {steps} observed steps", report.iterations));
    }
    Ok(steps)
}

/// `F(x) = A x - b` for a well-conditioned random `A` with known root.
pub fn random_linear(rng: &mut impl Rng, n: usize) -> (dfsane_core::problems::LinearProblem, Vec<f64>) {
    let a = well_conditioned(rng, n, 0.5);
    let root = gaussian(rng, n);
    let b = matvec(n, &a, &root);
    (dfsane_core::problems::linear_problem(a, b).unwrap(), root)
}
