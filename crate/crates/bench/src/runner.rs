//! Executes run specifications, serially or on a worker pool.

use std::time::Instant;

use dfsane_core::{ConfigError, SolveReport, Solver, SolverConfig};
use rayon::prelude::*;

use crate::spec::{RunSpec, SpecError};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub n: usize,
    pub config: SolverConfig,
    pub report: SolveReport,
    /// Wall-clock seconds for the whole solve.
    pub elapsed_seconds: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
}

/// Solves one instance from `u = 0`.
pub fn execute(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    let problem = spec.problem.build()?;
    let n = problem.dim();
    let config = spec.config(n);
    let x0 = vec![0.0; n];
    let start = Instant::now();
    let clock = move || start.elapsed().as_secs_f64();
    let report = Solver::new(&config).clock(&clock).run(&*problem, &x0)?;
    let elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(RunOutcome {
        spec: spec.clone(),
        n,
        config,
        report,
        elapsed_seconds,
    })
}

/// Runs every spec on `workers` threads; results keep the input order.
pub fn execute_all(specs: &[RunSpec], workers: usize) -> Vec<Result<RunOutcome, RunError>> {
    if workers <= 1 {
        return specs.iter().map(execute).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| specs.par_iter().map(execute).collect()),
        Err(_) => specs.iter().map(execute).collect(),
    }
}
