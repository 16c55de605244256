//! Solver tunables.

use thiserror::Error;

/// `sqrt(f64::EPSILON)`, the default lower bound on `|sigma|`.
pub const SQRT_EPS: f64 = 1.490_116_119_384_765_6e-8;

/// How the scaling factor `sigma_k` of the residual step is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaStrategy {
    /// Step-length based schedule tuned for accelerated runs; always positive.
    Conservative,
    /// Barzilai-Borwein quotient `|s|^2 / y's`, sign preserving.
    Spectral,
}

/// What happens after the line search produced its trial point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccelMode {
    /// Plain DF-SANE: the trial point is the next iterate.
    None,
    /// Limited-memory sequential secant acceleration with rank-drop probes.
    Secant,
    /// Anderson Mixing fixed-point scheme with mixing parameter `beta`.
    /// Runs without line search.
    Anderson { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomSafeguard {
    Off,
    /// Replace the residual direction by a random one of the same norm whenever
    /// the accepted step drops below `alpha_small`.
    On { alpha_small: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("initial point has dimension {got}, problem has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial point is not finite")]
    NonFiniteStart,
    #[error("problem dimension must be positive")]
    EmptyProblem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sufficient-decrease constant of the nonmonotone test.
    pub gamma: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Safeguards of the quadratic step reduction.
    pub tau_min: f64,
    pub tau_max: f64,
    /// Number of past merit values in the nonmonotone reference.
    pub memory: usize,
    /// Absolute stopping tolerance on `||F(x)||_2`.
    pub eps: f64,
    pub h_init: f64,
    pub h_small: f64,
    pub h_large: f64,
    /// Maximum number of stored secant pairs.
    pub depth: usize,
    pub max_iters: usize,
    pub max_fevals: usize,
    pub sigma_strategy: SigmaStrategy,
    pub accel_mode: AccelMode,
    pub random_safeguard: RandomSafeguard,
    /// When set, accelerated points farther than `c * ||F(x^k)||` from `x^k`
    /// are discarded in favour of the trial point.
    pub accept_guard_c: Option<f64>,
}

impl SolverConfig {
    /// Accelerated DF-SANE: conservative sigma in `[sqrt(eps), 1]` and secant
    /// acceleration.
    pub fn accelerated() -> Self {
        SolverConfig {
            gamma: 1e-4,
            sigma_min: SQRT_EPS,
            sigma_max: 1.0,
            tau_min: 0.1,
            tau_max: 0.5,
            memory: 10,
            eps: 1e-6,
            h_init: 0.01,
            h_small: 1e-4,
            h_large: 0.1,
            depth: 5,
            max_iters: 100_000,
            max_fevals: 1_000_000,
            sigma_strategy: SigmaStrategy::Conservative,
            accel_mode: AccelMode::Secant,
            random_safeguard: RandomSafeguard::Off,
            accept_guard_c: None,
        }
    }

    /// Plain DF-SANE: spectral sigma in `[sqrt(eps), 1/sqrt(eps)]`, no
    /// acceleration.
    pub fn dfsane() -> Self {
        SolverConfig {
            sigma_max: 1.0 / SQRT_EPS,
            sigma_strategy: SigmaStrategy::Spectral,
            accel_mode: AccelMode::None,
            ..Self::accelerated()
        }
    }

    /// Anderson Mixing with depth `depth` and mixing parameter `beta`.
    pub fn anderson(depth: usize, beta: f64) -> Self {
        SolverConfig {
            depth,
            accel_mode: AccelMode::Anderson { beta },
            ..Self::accelerated()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, name: &'static str, value: f64, range: &'static str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { name, value, range })
            }
        }
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        check(open_unit(self.gamma), "gamma", self.gamma, "(0, 1)")?;
        check(positive(self.sigma_min), "sigma_min", self.sigma_min, "(0, inf)")?;
        check(
            self.sigma_max > self.sigma_min && self.sigma_max.is_finite(),
            "sigma_max",
            self.sigma_max,
            "(sigma_min, inf)",
        )?;
        check(open_unit(self.tau_min), "tau_min", self.tau_min, "(0, 1)")?;
        check(
            self.tau_max > self.tau_min && self.tau_max < 1.0,
            "tau_max",
            self.tau_max,
            "(tau_min, 1)",
        )?;
        check(self.memory >= 1, "memory", self.memory as f64, "[1, inf)")?;
        check(positive(self.eps), "eps", self.eps, "(0, inf)")?;
        check(positive(self.h_init), "h_init", self.h_init, "(0, inf)")?;
        check(positive(self.h_small), "h_small", self.h_small, "(0, inf)")?;
        check(positive(self.h_large), "h_large", self.h_large, "(0, inf)")?;
        check(self.depth >= 1, "depth", self.depth as f64, "[1, inf)")?;
        check(self.max_iters >= 1, "max_iters", self.max_iters as f64, "[1, inf)")?;
        check(self.max_fevals >= 1, "max_fevals", self.max_fevals as f64, "[1, inf)")?;
        if let AccelMode::Anderson { beta } = self.accel_mode {
            check(positive(beta), "beta", beta, "(0, inf)")?;
        }
        if let RandomSafeguard::On { alpha_small, .. } = self.random_safeguard {
            check(positive(alpha_small), "alpha_small", alpha_small, "(0, inf)")?;
        }
        if let Some(c) = self.accept_guard_c {
            check(positive(c), "accept_guard_c", c, "(0, inf)")?;
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::accelerated()
    }
}
