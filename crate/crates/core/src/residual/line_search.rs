use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use super::reduce_alpha;
use crate::config::SolverConfig;
use crate::problem::{merit, EvalError, Evaluator};
use crate::report::DirectionSign;

/// Both step sizes below this value without acceptance stop the search.
pub const ALPHA_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    /// The unscaled direction `d = -sigma v` or `d = +sigma v`.
    pub direction: Vec<f64>,
    pub sign: DirectionSign,
    pub x_trial: Vec<f64>,
    pub f_trial: Vec<f64>,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("step sizes fell below {ALPHA_FLOOR:e} after {evals} evaluations")]
    Stalled { evals: usize },
    #[error(transparent)]
    Eval(EvalError),
}

/// Double backtracking along `-sigma v` and `+sigma v`.
///
/// Accepts the first trial with
/// `f(x + alpha d) <= fbar + eta - gamma alpha^2 f(x)`. A trial point at which
/// the residual is undefined or non-finite counts as a rejection.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    ev: &mut Evaluator<'_>,
    x: &[f64],
    fx: &[f64],
    v: &[f64],
    sigma: f64,
    fbar: f64,
    eta: f64,
    cfg: &SolverConfig,
) -> Result<LineSearchOutcome, LineSearchError> {
    let n = x.len();
    let f_x = merit(fx);
    let start = ev.count();
    let mut alpha_plus = 1.0;
    let mut alpha_minus = 1.0;
    let d_neg: Vec<f64> = v.iter().map(|vi| -sigma * vi).collect();
    let d_pos: Vec<f64> = v.iter().map(|vi| sigma * vi).collect();
    let mut x_trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];

    let try_step = |ev: &mut Evaluator<'_>,
                        alpha: f64,
                        d: &[f64],
                        x_trial: &mut Vec<f64>,
                        f_trial: &mut Vec<f64>|
     -> Result<(f64, bool), LineSearchError> {
        for ((t, xi), di) in x_trial.iter_mut().zip(x).zip(d) {
            *t = xi + alpha * di;
        }
        let value = match ev.eval(x_trial, f_trial) {
            Ok(()) => merit(f_trial),
            Err(EvalError::DimensionMismatch { expected, got }) => {
                return Err(LineSearchError::Eval(EvalError::DimensionMismatch { expected, got }))
            }
            Err(_) => f64::INFINITY,
        };
        let bound = fbar + eta - cfg.gamma * alpha * alpha * f_x;
        Ok((value, value <= bound))
    };

    loop {
        let (f_plus, ok) = try_step(ev, alpha_plus, &d_neg, &mut x_trial, &mut f_trial)?;
        if ok {
            return Ok(LineSearchOutcome {
                alpha: alpha_plus,
                direction: d_neg,
                sign: DirectionSign::Negative,
                x_trial,
                f_trial,
                evals: ev.count() - start,
            });
        }
        let (f_minus, ok) = try_step(ev, alpha_minus, &d_pos, &mut x_trial, &mut f_trial)?;
        if ok {
            return Ok(LineSearchOutcome {
                alpha: alpha_minus,
                direction: d_pos,
                sign: DirectionSign::Positive,
                x_trial,
                f_trial,
                evals: ev.count() - start,
            });
        }
        alpha_plus = reduce_alpha(alpha_plus, f_x, f_plus, cfg.tau_min, cfg.tau_max);
        alpha_minus = reduce_alpha(alpha_minus, f_x, f_minus, cfg.tau_min, cfg.tau_max);
        if alpha_plus < ALPHA_FLOOR && alpha_minus < ALPHA_FLOOR {
            return Err(LineSearchError::Stalled {
                evals: ev.count() - start,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ResidualProblem;

    struct Affine1 {
        slope: f64,
        offset: f64,
    }
    impl ResidualProblem for Affine1 {
        fn dim(&self) -> usize {
            1
        }
        fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
            out[0] = self.slope * x[0] + self.offset;
            Ok(())
        }
    }

    fn cfg() -> SolverConfig {
        SolverConfig::dfsane()
    }

    #[test]
    fn negative_branch_accepts_immediately() {
        let p = Affine1 { slope: 1.0, offset: 0.0 };
        let mut ev = Evaluator::new(&p);
        let out = line_search(&mut ev, &[1.0], &[1.0], &[1.0], 0.5, 0.5, 1e-8, &cfg()).unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.direction, vec![-0.5]);
        assert_eq!(out.sign, DirectionSign::Negative);
        assert_eq!(out.x_trial, vec![0.5]);
        assert_eq!(merit(&out.f_trial), 0.125);
        assert_eq!(out.evals, 1);
    }

    #[test]
    fn positive_branch_accepts_second() {
        // F(x) = 1 - x at x = 0.
        let p = Affine1 { slope: -1.0, offset: 1.0 };
        let mut ev = Evaluator::new(&p);
        let out = line_search(&mut ev, &[0.0], &[1.0], &[1.0], 1.0, 0.5, 1e-8, &cfg()).unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.direction, vec![1.0]);
        assert_eq!(out.sign, DirectionSign::Positive);
        assert_eq!(out.x_trial, vec![1.0]);
        assert_eq!(out.f_trial, vec![0.0]);
        assert_eq!(out.evals, 2);
    }

    #[test]
    fn exact_zero_at_unit_step() {
        let p = Affine1 { slope: 1.0, offset: 0.0 };
        let mut ev = Evaluator::new(&p);
        let out = line_search(&mut ev, &[1.0], &[1.0], &[1.0], 1.0, 0.5, 1e-8, &cfg()).unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.x_trial, vec![0.0]);
    }

    #[test]
    fn backtracks_with_quadratic_reduction() {
        // F(x) = x at x = 1 with a huge sigma: both unit trials overshoot.
        let p = Affine1 { slope: 1.0, offset: 0.0 };
        let mut ev = Evaluator::new(&p);
        let out = line_search(&mut ev, &[1.0], &[1.0], &[1.0], 100.0, 0.5, 1e-8, &cfg()).unwrap();
        assert!(out.alpha < 1.0);
        let f_new = merit(&out.f_trial);
        assert!(f_new <= 0.5 + 1e-8 - 1e-4 * out.alpha * out.alpha * 0.5);
    }

    #[test]
    fn undefined_trials_are_rejected_until_stall() {
        struct Nowhere;
        impl ResidualProblem for Nowhere {
            fn dim(&self) -> usize {
                1
            }
            fn evaluate(&self, _x: &[f64], _out: &mut [f64]) -> Result<(), EvalError> {
                Err(EvalError::Domain { index: 0 })
            }
        }
        let mut ev = Evaluator::new(&Nowhere);
        let err = line_search(&mut ev, &[1.0], &[1.0], &[1.0], 1.0, 0.5, 1e-8, &cfg()).unwrap_err();
        assert!(matches!(err, LineSearchError::Stalled { .. }));
    }
}
