//! Post-line-search acceleration: the limited-memory sequential secant step with
//! rank-drop probes and zero-rank restarts, and the Anderson Mixing step.
//!
//! Both keep the pairs `(s^j, y^j)` in a [`SecantMemory`] whose `Y` block is
//! held as an [`UpdatableQr`] so that the minimum-norm least-squares problem
//! `Y w = F(x^k)` costs `O(n p)` per iteration.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::linalg;
use crate::problem::{EvalError, Evaluator};
use crate::qr::UpdatableQr;
use crate::report::Branch;

/// An accelerated point farther than this factor times `max{1, ||x^k||}` from
/// the origin is discarded.
pub const ACCEL_NORM_FACTOR: f64 = 10.0;

/// The stored increments `S` and residual differences `Y`.
#[derive(Debug, Clone)]
pub struct SecantMemory {
    n: usize,
    depth: usize,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    qr: UpdatableQr,
    r_max: usize,
    /// 0-based index of the next probe axis.
    probe: usize,
}

impl SecantMemory {
    /// Memory for `n`-vectors with at most `min(depth, n)` pairs.
    pub fn new(n: usize, depth: usize) -> Self {
        let depth = depth.min(n).max(1);
        SecantMemory {
            n,
            depth,
            s: VecDeque::with_capacity(depth),
            y: VecDeque::with_capacity(depth),
            qr: UpdatableQr::new(n, depth),
            r_max: 0,
            probe: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Effective capacity `min(p, n)`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Numerical rank of `Y`.
    pub fn rank(&self) -> usize {
        self.qr.numerical_rank()
    }

    /// Highest rank of `Y` observed so far.
    pub fn r_max(&self) -> usize {
        self.r_max
    }

    /// 1-based index `l` of the axis used by the next probe.
    pub fn probe_index(&self) -> usize {
        self.probe + 1
    }

    pub fn s_columns(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.s.iter().map(|c| c.as_slice())
    }

    pub fn y_columns(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.y.iter().map(|c| c.as_slice())
    }

    pub fn qr(&self) -> &UpdatableQr {
        &self.qr
    }

    /// Appends a pair, evicting the leftmost one when full.
    pub fn push_pair(&mut self, s: Vec<f64>, y: Vec<f64>) {
        assert_eq!(s.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.len() == self.depth {
            self.remove_leftmost();
        }
        self.qr.append_column(&y).expect("room was made for the column");
        self.s.push_back(s);
        self.y.push_back(y);
        self.debug_check();
    }

    pub fn remove_leftmost(&mut self) {
        if self.s.pop_front().is_some() {
            self.y.pop_front();
            self.qr.remove_leftmost().expect("memory and factorization agree");
            self.debug_check();
        }
    }

    pub fn remove_rightmost(&mut self) {
        if self.s.pop_back().is_some() {
            self.y.pop_back();
            self.qr.remove_rightmost().expect("memory and factorization agree");
            self.debug_check();
        }
    }

    /// Overwrites the newest pair. Panics on an empty memory.
    pub fn replace_rightmost(&mut self, s: Vec<f64>, y: Vec<f64>) {
        assert!(!self.is_empty(), "replace_rightmost on empty memory");
        self.qr.replace_rightmost(&y).expect("memory and factorization agree");
        *self.s.back_mut().unwrap() = s;
        *self.y.back_mut().unwrap() = y;
        self.debug_check();
    }

    /// Drops every pair. `r_max` and the probe index survive.
    pub fn reset(&mut self) {
        self.s.clear();
        self.y.clear();
        self.qr.clear();
    }

    /// Minimum-norm least-squares coefficients of `Y w = rhs`; `None` when
    /// empty.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        self.qr.min_norm_solve(rhs).ok()
    }

    /// `sum_j w_j s_j`
    pub fn combine_s(&self, w: &[f64]) -> Vec<f64> {
        combine(&self.s, w, self.n)
    }

    /// `sum_j w_j y_j`
    pub fn combine_y(&self, w: &[f64]) -> Vec<f64> {
        combine(&self.y, w, self.n)
    }

    fn note_rank(&mut self) {
        self.r_max = self.r_max.max(self.rank());
    }

    fn take_probe_axis(&mut self) -> usize {
        let axis = self.probe;
        self.probe = (self.probe + 1) % self.n;
        axis
    }

    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        {
            let rebuilt = self.qr.reconstruct();
            let mut err = 0.0;
            let mut size = 0.0;
            for (a, b) in rebuilt.iter().zip(&self.y) {
                for (u, v) in a.iter().zip(b) {
                    err += (u - v) * (u - v);
                    size += v * v;
                }
            }
            debug_assert!(
                libm::sqrt(err) <= 1e-10 * libm::sqrt(size).max(1.0),
                "QR of Y drifted: {} vs {}",
                libm::sqrt(err),
                libm::sqrt(size)
            );
        }
    }
}

fn combine(cols: &VecDeque<Vec<f64>>, w: &[f64], n: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n];
    for (c, wj) in cols.iter().zip(w) {
        linalg::axpy(*wj, c, &mut out);
    }
    out
}

/// What happened to the stored pairs during one acceleration call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryAction {
    /// The trial pair was replaced by the accelerated pair.
    SubstitutedRightmost,
    KeptTrialPair,
    /// The memory was rebuilt from probes around a zero-rank `Y`.
    Restarted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelDecision {
    pub x_next: Vec<f64>,
    pub f_next: Vec<f64>,
    pub branch: Branch,
    /// Residual evaluations spent inside the call.
    pub extra_evals: usize,
    pub memory_action: MemoryAction,
}

/// Hook run after each line search: may replace the trial point by a better one.
///
/// The returned point must have a residual no larger than `f_trial`'s.
pub trait Accelerator {
    fn accelerate(
        &mut self,
        ev: &mut Evaluator<'_>,
        x_k: &[f64],
        f_k: &[f64],
        x_trial: Vec<f64>,
        f_trial: Vec<f64>,
    ) -> Result<AccelDecision, EvalError>;
}

/// Keeps the trial point; plain DF-SANE.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAcceleration;

impl Accelerator for NoAcceleration {
    fn accelerate(
        &mut self,
        _ev: &mut Evaluator<'_>,
        _x_k: &[f64],
        _f_k: &[f64],
        x_trial: Vec<f64>,
        f_trial: Vec<f64>,
    ) -> Result<AccelDecision, EvalError> {
        Ok(AccelDecision {
            x_next: x_trial,
            f_next: f_trial,
            branch: Branch::Trial,
            extra_evals: 0,
            memory_action: MemoryAction::KeptTrialPair,
        })
    }
}

/// Sequential secant acceleration over the last `p` pairs.
#[derive(Debug, Clone)]
pub struct SecantAccelerator {
    memory: SecantMemory,
    h_small: f64,
    h_large: f64,
    accept_guard_c: Option<f64>,
}

impl SecantAccelerator {
    pub fn new(n: usize, depth: usize, h_small: f64, h_large: f64) -> Self {
        SecantAccelerator {
            memory: SecantMemory::new(n, depth),
            h_small,
            h_large,
            accept_guard_c: None,
        }
    }

    /// Also discard accelerated points with `||x_accel - x^k|| > c ||F(x^k)||`.
    pub fn with_accept_guard(mut self, c: Option<f64>) -> Self {
        self.accept_guard_c = c;
        self
    }

    pub fn memory(&self) -> &SecantMemory {
        &self.memory
    }

    pub fn memory_mut(&mut self) -> &mut SecantMemory {
        &mut self.memory
    }

    pub fn reset(&mut self) {
        self.memory.reset();
    }

    /// The accelerated pair takes the place of the trial pair. With depth 1 a
    /// rank-drop probe has already evicted the trial pair, so it is appended.
    fn store_accepted(&mut self, s: Vec<f64>, y: Vec<f64>) {
        if self.memory.is_empty() {
            self.memory.push_pair(s, y);
        } else {
            self.memory.replace_rightmost(s, y);
        }
        self.memory.note_rank();
    }

    /// `x^k - S w` with `w` the minimum-norm solution of `Y w = F(x^k)`.
    fn candidate(&self, x_k: &[f64], f_k: &[f64]) -> Option<Vec<f64>> {
        let w = self.memory.solve(f_k)?;
        let step = self.memory.combine_s(&w);
        Some(linalg::sub(x_k, &step))
    }

    /// Evaluates `x_accel` when it passes the cheap guards and returns its
    /// residual if it beats `f_best`. Undefined residuals reject the point.
    fn screen(
        &self,
        ev: &mut Evaluator<'_>,
        x_k: &[f64],
        f_k: &[f64],
        x_accel: &[f64],
        f_best: &[f64],
    ) -> Result<Option<Vec<f64>>, EvalError> {
        // Negated comparisons so that NaN norms reject the point.
        #![allow(clippy::neg_cmp_op_on_partial_ord)]
        if x_accel == x_k {
            return Ok(None);
        }
        let bound = ACCEL_NORM_FACTOR * linalg::norm2(x_k).max(1.0);
        if !(linalg::norm2(x_accel) <= bound) {
            return Ok(None);
        }
        if let Some(c) = self.accept_guard_c {
            if !(linalg::dist2(x_accel, x_k) <= c * linalg::norm2(f_k)) {
                return Ok(None);
            }
        }
        let f_accel = match ev.eval_new(x_accel) {
            Ok(f) => f,
            Err(e @ EvalError::DimensionMismatch { .. }) => return Err(e),
            Err(_) => return Ok(None),
        };
        if linalg::norm2(&f_accel) < linalg::norm2(f_best) {
            Ok(Some(f_accel))
        } else {
            Ok(None)
        }
    }
}

impl Accelerator for SecantAccelerator {
    fn accelerate(
        &mut self,
        ev: &mut Evaluator<'_>,
        x_k: &[f64],
        f_k: &[f64],
        x_trial: Vec<f64>,
        f_trial: Vec<f64>,
    ) -> Result<AccelDecision, EvalError> {
        let start = ev.count();
        let n = x_k.len();
        let mut x_cur = x_trial;
        let mut f_cur = f_trial;
        let mut branch = Branch::Trial;
        let mut action = MemoryAction::KeptTrialPair;

        // Newest pair from the trial point, evicting the oldest when full.
        let mem = &mut self.memory;
        mem.push_pair(linalg::sub(&x_cur, x_k), linalg::sub(&f_cur, f_k));
        mem.note_rank();

        // Rank dropped below its historical maximum: add one probe pair.
        let mut probe_added = false;
        if mem.rank() < mem.r_max() {
            if mem.len() == mem.depth() {
                mem.remove_leftmost();
            }
            let axis = mem.take_probe_axis();
            let mut x_extra = x_k.to_vec();
            x_extra[axis] += self.h_small;
            let f_extra = ev.eval_new(&x_extra)?;
            mem.push_pair(linalg::sub(&x_extra, x_k), linalg::sub(&f_extra, f_k));
            mem.note_rank();
            probe_added = true;
        }

        if self.memory.rank() != 0 {
            let x_accel = self.candidate(x_k, f_k);
            if probe_added {
                self.memory.remove_rightmost();
            }
            if let Some(x_accel) = x_accel {
                if let Some(f_accel) = self.screen(ev, x_k, f_k, &x_accel, &f_cur)? {
                    self.store_accepted(linalg::sub(&x_accel, x_k), linalg::sub(&f_accel, f_k));
                    x_cur = x_accel;
                    f_cur = f_accel;
                    branch = Branch::Accelerated;
                    action = MemoryAction::SubstitutedRightmost;
                }
            }
        }

        if self.memory.rank() == 0 {
            // Rebuild around the current trial with p - 1 large probes.
            self.memory.reset();
            for _ in 0..self.memory.depth() - 1 {
                let axis = self.memory.take_probe_axis();
                let mut x_extra = x_k.to_vec();
                x_extra[axis] += self.h_large;
                let f_extra = ev.eval_new(&x_extra)?;
                self.memory
                    .push_pair(linalg::sub(&x_extra, &x_cur), linalg::sub(&f_extra, &f_cur));
                self.memory.note_rank();
            }
            self.memory
                .push_pair(linalg::sub(&x_cur, x_k), linalg::sub(&f_cur, f_k));
            self.memory.note_rank();
            action = MemoryAction::Restarted;

            if self.memory.rank() != 0 {
                if let Some(x_accel) = self.candidate(x_k, f_k) {
                    if let Some(f_accel) = self.screen(ev, x_k, f_k, &x_accel, &f_cur)? {
                        self.store_accepted(linalg::sub(&x_accel, x_k), linalg::sub(&f_accel, f_k));
                        x_cur = x_accel;
                        f_cur = f_accel;
                        branch = Branch::Accelerated;
                    }
                }
            }
        }
        debug_assert_eq!(x_cur.len(), n);

        Ok(AccelDecision {
            x_next: x_cur,
            f_next: f_cur,
            branch,
            extra_evals: ev.count() - start,
            memory_action: action,
        })
    }
}

/// Intermediate quantities of one Anderson Mixing step.
#[derive(Debug, Clone, PartialEq)]
pub struct AndersonStep {
    /// `x^k - S w`
    pub x_bar: Vec<f64>,
    /// `F(x^k) - Y w`, the minimum-norm element of the affine residual span.
    pub f_bar: Vec<f64>,
    /// `x_bar - beta f_bar`
    pub next: Vec<f64>,
}

/// Anderson Mixing step with all intermediates.
pub fn anderson_extrapolate(x_k: &[f64], f_k: &[f64], mem: &SecantMemory, beta: f64) -> AndersonStep {
    let (x_bar, f_bar) = match mem.solve(f_k) {
        Some(w) => (
            linalg::sub(x_k, &mem.combine_s(&w)),
            linalg::sub(f_k, &mem.combine_y(&w)),
        ),
        None => (x_k.to_vec(), f_k.to_vec()),
    };
    let next = x_bar.iter().zip(&f_bar).map(|(x, f)| x - beta * f).collect();
    AndersonStep { x_bar, f_bar, next }
}

/// Next Anderson Mixing iterate `x_bar - beta f_bar`. With an empty memory this
/// is plain mixing `x^k - beta F(x^k)`.
pub fn anderson_step(x_k: &[f64], f_k: &[f64], mem: &SecantMemory, beta: f64) -> Vec<f64> {
    anderson_extrapolate(x_k, f_k, mem, beta).next
}
