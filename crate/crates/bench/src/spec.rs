//! What to solve and how.

use dfsane_core::problems::{bratu2d, bratu3d, linear_problem, ProblemError, ProblemKind};
use dfsane_core::{AccelMode, RandomSafeguard, ResidualProblem, SigmaStrategy, SolverConfig};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Method {
    /// Conservative sigma plus secant acceleration.
    #[value(name = "accel-dfsane")]
    AccelDfsane,
    /// Spectral sigma, no acceleration.
    Dfsane,
    /// Anderson Mixing without line search.
    Anderson,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::AccelDfsane => "accel-dfsane",
            Method::Dfsane => "dfsane",
            Method::Anderson => "anderson",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    Bratu2d { n_p: usize, theta: f64 },
    Bratu3d { n_p: usize, theta: f64 },
    /// `A = diag(1, ..., n)`, `b = A 1`; the root is the all-ones vector.
    Linear { n: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("--np is required for {0}")]
    MissingGrid(ProblemKind),
    #[error("--n is required for linear")]
    MissingSize,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, n_p: Option<usize>, n: Option<usize>, theta: f64) -> Result<Self, SpecError> {
        Ok(match kind {
            ProblemKind::Bratu2d => ProblemSpec::Bratu2d {
                n_p: n_p.ok_or(SpecError::MissingGrid(kind))?,
                theta,
            },
            ProblemKind::Bratu3d => ProblemSpec::Bratu3d {
                n_p: n_p.ok_or(SpecError::MissingGrid(kind))?,
                theta,
            },
            ProblemKind::Linear => ProblemSpec::Linear {
                n: n.ok_or(SpecError::MissingSize)?,
            },
        })
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemSpec::Bratu2d { .. } => ProblemKind::Bratu2d,
            ProblemSpec::Bratu3d { .. } => ProblemKind::Bratu3d,
            ProblemSpec::Linear { .. } => ProblemKind::Linear,
        }
    }

    pub fn build(&self) -> Result<Box<dyn ResidualProblem + Send + Sync>, SpecError> {
        Ok(match *self {
            ProblemSpec::Bratu2d { n_p, theta } => Box::new(bratu2d(n_p, theta)?),
            ProblemSpec::Bratu3d { n_p, theta } => Box::new(bratu3d(n_p, theta)?),
            ProblemSpec::Linear { n } => {
                let mut a = vec![0.0; n * n];
                let mut b = vec![0.0; n];
                for i in 0..n {
                    a[i * n + i] = (i + 1) as f64;
                    b[i] = (i + 1) as f64;
                }
                Box::new(linear_problem(a, b)?)
            }
        })
    }

    /// `(h_init, h_small, h_large)` tuned per family.
    pub fn default_steps(&self) -> (f64, f64, f64) {
        match self {
            ProblemSpec::Bratu3d { .. } => (1.0, 0.1, 0.1),
            ProblemSpec::Bratu2d { .. } | ProblemSpec::Linear { .. } => (0.01, 1e-4, 0.1),
        }
    }
}

/// Method parameters; `None` picks the method or problem default.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodParams {
    pub depth: usize,
    pub beta: f64,
    pub h_init: Option<f64>,
    pub h_small: Option<f64>,
    pub h_large: Option<f64>,
    pub eps_scale: f64,
    pub max_iters: usize,
    pub max_fevals: usize,
    pub sigma_strategy: Option<SigmaStrategy>,
    pub seed: u64,
    /// Enables the random-direction safeguard below this step length.
    pub alpha_small: Option<f64>,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            depth: 5,
            beta: 5e-5,
            h_init: None,
            h_small: None,
            h_large: None,
            eps_scale: 1e-6,
            max_iters: 100_000,
            max_fevals: 1_000_000,
            sigma_strategy: None,
            seed: 0,
            alpha_small: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub method: Method,
    pub params: MethodParams,
}

impl RunSpec {
    /// Solver configuration for a problem of dimension `n`, with
    /// `eps = eps_scale * sqrt(n)`.
    pub fn config(&self, n: usize) -> SolverConfig {
        let p = &self.params;
        let mut cfg = match self.method {
            Method::AccelDfsane => SolverConfig::accelerated(),
            Method::Dfsane => SolverConfig::dfsane(),
            Method::Anderson => SolverConfig {
                accel_mode: AccelMode::Anderson { beta: p.beta },
                ..SolverConfig::accelerated()
            },
        };
        let (h_init, h_small, h_large) = self.problem.default_steps();
        cfg.h_init = p.h_init.unwrap_or(h_init);
        cfg.h_small = p.h_small.unwrap_or(h_small);
        cfg.h_large = p.h_large.unwrap_or(h_large);
        cfg.depth = p.depth;
        cfg.eps = p.eps_scale * (n as f64).sqrt();
        cfg.max_iters = p.max_iters;
        cfg.max_fevals = p.max_fevals;
        if let Some(s) = p.sigma_strategy {
            cfg.sigma_strategy = s;
        }
        if let Some(alpha_small) = p.alpha_small {
            cfg.random_safeguard = RandomSafeguard::On {
                alpha_small,
                seed: p.seed,
            };
        }
        cfg
    }
}
