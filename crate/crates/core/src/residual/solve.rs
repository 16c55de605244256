use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    conservative_sigma, eta_schedule, line_search, random_direction, spectral_sigma, LineSearchError,
    LineSearchOutcome, NonmonotoneMemory,
};
use crate::config::{AccelMode, ConfigError, RandomSafeguard, SigmaStrategy, SolverConfig};
use crate::linalg;
use crate::problem::{merit, Evaluator, ResidualProblem};
use crate::report::{Branch, DirectionSign, SolveReport, Status, StepRecord, TraceEntry};
use crate::secant::{anderson_extrapolate, Accelerator, NoAcceleration, SecantAccelerator, SecantMemory};

/// Anderson runs stop once the residual grows by this factor over the start.
const DIVERGENCE_FACTOR: f64 = 1e12;

/// Source of wall-clock time for trace entries, sampled once per iteration.
pub trait Clock {
    fn elapsed_seconds(&self) -> f64;
}

/// Reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }
}

impl<F: Fn() -> f64> Clock for F {
    fn elapsed_seconds(&self) -> f64 {
        self()
    }
}

/// Everything that went into one line-search iteration.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub k: usize,
    pub x: &'a [f64],
    pub f: &'a [f64],
    /// Direction with `||v|| = ||F(x)||`.
    pub v: &'a [f64],
    pub sigma: f64,
    /// Nonmonotone reference value.
    pub fbar: f64,
    pub eta: f64,
    pub alpha: f64,
    pub direction: &'a [f64],
    pub x_trial: &'a [f64],
    pub f_trial: &'a [f64],
    pub x_next: &'a [f64],
    pub f_next: &'a [f64],
    pub branch: Branch,
    /// `v` was drawn at random by the safeguard.
    pub randomized: bool,
}

pub trait SolveObserver {
    fn on_step(&mut self, event: &StepEvent<'_>);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoObserver;

impl SolveObserver for NoObserver {
    fn on_step(&mut self, _event: &StepEvent<'_>) {}
}

impl<F: FnMut(&StepEvent<'_>)> SolveObserver for F {
    fn on_step(&mut self, event: &StepEvent<'_>) {
        self(event)
    }
}

/// Solves `F(x) = 0` from `x0` with the method selected by `cfg.accel_mode`.
pub fn solve<P: ResidualProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport, ConfigError> {
    Solver::new(cfg).run(&problem, x0)
}

/// Solver with an optional clock and step observer.
pub struct Solver<'a> {
    cfg: &'a SolverConfig,
    clock: &'a dyn Clock,
    observer: Option<&'a mut dyn SolveObserver>,
}

impl<'a> Solver<'a> {
    pub fn new(cfg: &'a SolverConfig) -> Self {
        Solver {
            cfg,
            clock: &NoClock,
            observer: None,
        }
    }

    pub fn clock(mut self, clock: &'a dyn Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn observer(mut self, observer: &'a mut dyn SolveObserver) -> Self {
        self.observer = Some(observer);
        self
    }

    /// Runs the method selected by `cfg.accel_mode`.
    pub fn run(self, problem: &dyn ResidualProblem, x0: &[f64]) -> Result<SolveReport, ConfigError> {
        match self.cfg.accel_mode {
            AccelMode::None => self.run_with(problem, x0, &mut NoAcceleration),
            AccelMode::Secant => {
                let mut acc = SecantAccelerator::new(problem.dim(), self.cfg.depth, self.cfg.h_small, self.cfg.h_large)
                    .with_accept_guard(self.cfg.accept_guard_c);
                self.run_with(problem, x0, &mut acc)
            }
            AccelMode::Anderson { beta } => self.run_anderson(problem, x0, beta),
        }
    }

    /// Runs the line-search driver with a caller-supplied accelerator.
    pub fn run_with(
        mut self,
        problem: &dyn ResidualProblem,
        x0: &[f64],
        accel: &mut dyn Accelerator,
    ) -> Result<SolveReport, ConfigError> {
        let cfg = self.cfg;
        check_start(problem, x0, cfg)?;
        let n = x0.len();
        let mut ev = Evaluator::new(problem);
        let mut x = x0.to_vec();
        let mut f = match ev.eval_new(&x) {
            Ok(f) => f,
            Err(_) => return Ok(failed_start(x, ev.count(), self.clock)),
        };
        let mut norm = linalg::norm2(&f);
        let f0_norm = norm;
        let mut nonmonotone = NonmonotoneMemory::new(cfg.memory);
        nonmonotone.push(merit(&f));
        let mut trace = Vec::new();
        trace.push(entry(0, norm, None, ev.count(), self.clock));

        let (mut rng, mut alpha_small) = match cfg.random_safeguard {
            RandomSafeguard::On { alpha_small, seed } => (Some(ChaCha8Rng::seed_from_u64(seed)), alpha_small),
            RandomSafeguard::Off => (None, 0.0),
        };
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut k = 0;

        let status = loop {
            if norm <= cfg.eps {
                break Status::Converged;
            }
            if k >= cfg.max_iters {
                break Status::MaxIterations;
            }
            if ev.count() >= cfg.max_fevals {
                break Status::MaxFevals;
            }
            let sigma = match cfg.sigma_strategy {
                SigmaStrategy::Conservative => {
                    let x_prev = prev.as_ref().map_or(x.as_slice(), |p| p.0.as_slice());
                    conservative_sigma(k, x_prev, &x, norm, cfg.h_init, cfg.sigma_min, cfg.sigma_max)
                }
                SigmaStrategy::Spectral => match &prev {
                    None => 1.0f64.clamp(cfg.sigma_min, cfg.sigma_max),
                    Some((x_prev, f_prev)) => spectral_sigma(
                        &linalg::sub(&x, x_prev),
                        &linalg::sub(&f, f_prev),
                        cfg.sigma_min,
                        cfg.sigma_max,
                    ),
                },
            };
            let fbar = nonmonotone.max();
            let eta = eta_schedule(k, f0_norm);

            let mut v = f.clone();
            let mut ls = match line_search(&mut ev, &x, &f, &v, sigma, fbar, eta, cfg) {
                Ok(ls) => ls,
                Err(e) => break failure_status(&e),
            };
            let mut randomized = false;
            if let Some(rng) = rng.as_mut() {
                if ls.alpha < alpha_small {
                    v = random_direction(rng, n, norm);
                    ls = match line_search(&mut ev, &x, &f, &v, sigma, fbar, eta, cfg) {
                        Ok(ls) => ls,
                        Err(e) => break failure_status(&e),
                    };
                    randomized = true;
                    if ls.alpha < alpha_small {
                        alpha_small /= 2.0;
                    }
                }
            }
            let LineSearchOutcome {
                alpha,
                direction,
                sign,
                x_trial,
                f_trial,
                ..
            } = ls;
            let keep_trial = self.observer.as_ref().map(|_| (x_trial.clone(), f_trial.clone()));
            let decision = match accel.accelerate(&mut ev, &x, &f, x_trial, f_trial) {
                Ok(d) => d,
                Err(_) => break Status::EvaluationError,
            };
            if let (Some(obs), Some((x_trial, f_trial))) = (self.observer.as_mut(), keep_trial.as_ref()) {
                obs.on_step(&StepEvent {
                    k,
                    x: &x,
                    f: &f,
                    v: &v,
                    sigma,
                    fbar,
                    eta,
                    alpha,
                    direction: &direction,
                    x_trial,
                    f_trial,
                    x_next: &decision.x_next,
                    f_next: &decision.f_next,
                    branch: decision.branch,
                    randomized,
                });
            }
            prev = Some((
                core::mem::replace(&mut x, decision.x_next),
                core::mem::replace(&mut f, decision.f_next),
            ));
            norm = linalg::norm2(&f);
            nonmonotone.push(merit(&f));
            k += 1;
            let step = StepRecord {
                alpha,
                sign,
                branch: decision.branch,
                sigma,
            };
            trace.push(entry(k, norm, Some(step), ev.count(), self.clock));
        };

        Ok(SolveReport {
            status,
            iterations: k,
            fevals: ev.count(),
            final_residual_norm: norm,
            x,
            trace,
        })
    }

    /// Anderson Mixing on the fixed-point history, without line search.
    fn run_anderson(self, problem: &dyn ResidualProblem, x0: &[f64], beta: f64) -> Result<SolveReport, ConfigError> {
        let cfg = self.cfg;
        check_start(problem, x0, cfg)?;
        let mut ev = Evaluator::new(problem);
        let mut x = x0.to_vec();
        let mut f = match ev.eval_new(&x) {
            Ok(f) => f,
            Err(_) => return Ok(failed_start(x, ev.count(), self.clock)),
        };
        let mut norm = linalg::norm2(&f);
        let f0_norm = norm;
        let mut memory = SecantMemory::new(x.len(), cfg.depth);
        let mut trace = Vec::new();
        trace.push(entry(0, norm, None, ev.count(), self.clock));
        let mut k = 0;

        let status = loop {
            if norm <= cfg.eps {
                break Status::Converged;
            }
            if k >= cfg.max_iters {
                break Status::MaxIterations;
            }
            if ev.count() >= cfg.max_fevals {
                break Status::MaxFevals;
            }
            if norm > DIVERGENCE_FACTOR * f0_norm {
                break Status::Diverged;
            }
            let branch = if memory.is_empty() {
                Branch::Trial
            } else {
                Branch::Accelerated
            };
            let x_next = anderson_extrapolate(&x, &f, &memory, beta).next;
            let f_next = match ev.eval_new(&x_next) {
                Ok(f) => f,
                Err(_) => break Status::EvaluationError,
            };
            memory.push_pair(linalg::sub(&x_next, &x), linalg::sub(&f_next, &f));
            x = x_next;
            f = f_next;
            norm = linalg::norm2(&f);
            k += 1;
            let step = StepRecord {
                alpha: 1.0,
                sign: DirectionSign::Negative,
                branch,
                sigma: beta,
            };
            trace.push(entry(k, norm, Some(step), ev.count(), self.clock));
        };

        Ok(SolveReport {
            status,
            iterations: k,
            fevals: ev.count(),
            final_residual_norm: norm,
            x,
            trace,
        })
    }
}

fn check_start(problem: &dyn ResidualProblem, x0: &[f64], cfg: &SolverConfig) -> Result<(), ConfigError> {
    cfg.validate()?;
    if problem.dim() == 0 {
        return Err(ConfigError::EmptyProblem);
    }
    if x0.len() != problem.dim() {
        return Err(ConfigError::DimensionMismatch {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    if !linalg::all_finite(x0) {
        return Err(ConfigError::NonFiniteStart);
    }
    Ok(())
}

fn failure_status(e: &LineSearchError) -> Status {
    match e {
        LineSearchError::Stalled { .. } => Status::LineSearchFailure,
        LineSearchError::Eval(_) => Status::EvaluationError,
    }
}

fn failed_start(x: Vec<f64>, fevals: usize, clock: &dyn Clock) -> SolveReport {
    SolveReport {
        status: Status::EvaluationError,
        iterations: 0,
        fevals,
        final_residual_norm: f64::INFINITY,
        x,
        trace: alloc::vec![TraceEntry {
            k: 0,
            residual_norm: f64::INFINITY,
            merit: f64::INFINITY,
            step: None,
            cumulative_fevals: fevals,
            elapsed_seconds: clock.elapsed_seconds(),
        }],
    }
}

fn entry(k: usize, norm: f64, step: Option<StepRecord>, fevals: usize, clock: &dyn Clock) -> TraceEntry {
    TraceEntry {
        k,
        residual_norm: norm,
        merit: 0.5 * norm * norm,
        step,
        cumulative_fevals: fevals,
        elapsed_seconds: clock.elapsed_seconds(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::EvalError;

    struct Linear1 {
        slope: f64,
    }
    impl ResidualProblem for Linear1 {
        fn dim(&self) -> usize {
            1
        }
        fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
            out[0] = self.slope * x[0];
            Ok(())
        }
    }

    #[test]
    fn plain_dfsane_on_identity() {
        let mut cfg = SolverConfig::dfsane();
        cfg.eps = 1e-8;
        let r = solve(&Linear1 { slope: 1.0 }, &[5.0], &cfg).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.x[0].abs() <= 1e-8);
        assert_eq!(r.trace.len(), r.iterations + 1);
    }

    #[test]
    fn start_at_root_stops_immediately() {
        let r = solve(&Linear1 { slope: 3.0 }, &[0.0], &SolverConfig::accelerated()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.fevals, 1);
    }

    #[test]
    fn budgets_stop_the_loop() {
        let mut cfg = SolverConfig::dfsane();
        cfg.eps = 1e-300;
        cfg.max_iters = 3;
        let r = solve(&Linear1 { slope: 0.001 }, &[5.0], &cfg).unwrap();
        assert_eq!(r.status, Status::MaxIterations);
        assert_eq!(r.iterations, 3);
        cfg.max_iters = 1000;
        cfg.max_fevals = 4;
        let r = solve(&Linear1 { slope: 0.001 }, &[5.0], &cfg).unwrap();
        assert_eq!(r.status, Status::MaxFevals);
        assert!(r.fevals >= 4);
    }

    #[test]
    fn bad_start_is_a_config_error() {
        let cfg = SolverConfig::accelerated();
        assert_eq!(
            solve(&Linear1 { slope: 1.0 }, &[1.0, 2.0], &cfg),
            Err(ConfigError::DimensionMismatch { expected: 1, got: 2 })
        );
        assert_eq!(
            solve(&Linear1 { slope: 1.0 }, &[f64::NAN], &cfg),
            Err(ConfigError::NonFiniteStart)
        );
    }

    #[test]
    fn undefined_start_reports_evaluation_error() {
        struct Broken;
        impl ResidualProblem for Broken {
            fn dim(&self) -> usize {
                1
            }
            fn evaluate(&self, _x: &[f64], _out: &mut [f64]) -> Result<(), EvalError> {
                Err(EvalError::Domain { index: 0 })
            }
        }
        let r = solve(&Broken, &[1.0], &SolverConfig::accelerated()).unwrap();
        assert_eq!(r.status, Status::EvaluationError);
        assert_eq!(r.fevals, 1);
    }

    #[test]
    fn anderson_on_scalar_linear() {
        let mut cfg = SolverConfig::anderson(3, 0.5);
        cfg.eps = 1e-12;
        let r = solve(&Linear1 { slope: 2.0 }, &[4.0], &cfg).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.iterations <= 3);
    }

    #[test]
    fn anderson_divergence_cutoff() {
        // x^2 + 1 has no real root; depth-one mixing runs away.
        struct NoRoot;
        impl ResidualProblem for NoRoot {
            fn dim(&self) -> usize {
                2
            }
            fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
                out[0] = x[0] * x[0] + 1.0;
                out[1] = x[1] * x[1] + 1.0;
                Ok(())
            }
        }
        let mut cfg = SolverConfig::anderson(1, 1.0);
        cfg.max_iters = 200;
        let r = solve(&NoRoot, &[1.0, 2.0], &cfg).unwrap();
        assert_eq!(r.status, Status::Diverged);
        assert!(r.final_residual_norm > 1e12 * r.trace[0].residual_norm);
    }

    #[test]
    fn random_safeguard_keeps_direction_norm() {
        let mut cfg = SolverConfig::dfsane();
        cfg.random_safeguard = RandomSafeguard::On {
            alpha_small: 2.0,
            seed: 9,
        };
        let mut seen = 0usize;
        let mut obs = |e: &StepEvent<'_>| {
            if e.randomized {
                seen += 1;
            }
            let nv = linalg::norm2(e.v);
            let nf = linalg::norm2(e.f);
            assert!((nv - nf).abs() <= 1e-12 * nf);
        };
        let problem = Linear1 { slope: 1.0 };
        let r = Solver::new(&cfg).observer(&mut obs).run(&problem, &[5.0]).unwrap();
        assert_eq!(r.status, Status::Converged);
        // alpha never exceeds 1 < alpha_small, so every step was redrawn.
        assert_eq!(seen, r.iterations);
    }
}
