//! Report and table formats. Field and column order is part of the
//! interface; the golden files under `tests/golden` pin it down.

use std::io::Write;

use dfsane_core::{AccelMode, RandomSafeguard, SigmaStrategy, SolverConfig, Status};
use serde::{Deserialize, Serialize};

use crate::runner::RunOutcome;
use crate::spec::ProblemSpec;

/// Seconds rounded to millisecond resolution.
pub fn round_ms(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Params {
    Bratu { n_p: usize, theta: f64 },
    Linear { n: usize },
}

impl From<&ProblemSpec> for Params {
    fn from(p: &ProblemSpec) -> Self {
        match *p {
            ProblemSpec::Bratu2d { n_p, theta } | ProblemSpec::Bratu3d { n_p, theta } => Params::Bratu { n_p, theta },
            ProblemSpec::Linear { n } => Params::Linear { n },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub gamma: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub memory: usize,
    pub eps: f64,
    pub h_init: f64,
    pub h_small: f64,
    pub h_large: f64,
    pub depth: usize,
    pub max_iters: usize,
    pub max_fevals: usize,
    pub sigma_strategy: String,
    pub accel_mode: String,
    pub beta: Option<f64>,
    pub random_safeguard_alpha_small: Option<f64>,
    pub seed: Option<u64>,
}

impl From<&SolverConfig> for ConfigEcho {
    fn from(c: &SolverConfig) -> Self {
        let (accel_mode, beta) = match c.accel_mode {
            AccelMode::None => ("none", None),
            AccelMode::Secant => ("secant", None),
            AccelMode::Anderson { beta } => ("anderson", Some(beta)),
        };
        let (alpha_small, seed) = match c.random_safeguard {
            RandomSafeguard::Off => (None, None),
            RandomSafeguard::On { alpha_small, seed } => (Some(alpha_small), Some(seed)),
        };
        ConfigEcho {
            gamma: c.gamma,
            sigma_min: c.sigma_min,
            sigma_max: c.sigma_max,
            tau_min: c.tau_min,
            tau_max: c.tau_max,
            memory: c.memory,
            eps: c.eps,
            h_init: c.h_init,
            h_small: c.h_small,
            h_large: c.h_large,
            depth: c.depth,
            max_iters: c.max_iters,
            max_fevals: c.max_fevals,
            sigma_strategy: match c.sigma_strategy {
                SigmaStrategy::Conservative => "conservative",
                SigmaStrategy::Spectral => "spectral",
            }
            .into(),
            accel_mode: accel_mode.into(),
            beta,
            random_safeguard_alpha_small: alpha_small,
            seed,
        }
    }
}

/// JSON report of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub params: Params,
    pub method: String,
    pub n: usize,
    pub eps: f64,
    pub status: String,
    pub iterations: usize,
    pub fevals: usize,
    pub final_residual_norm: f64,
    pub elapsed_seconds: f64,
    pub config_echo: ConfigEcho,
}

impl From<&RunOutcome> for RunReport {
    fn from(o: &RunOutcome) -> Self {
        RunReport {
            problem: o.spec.problem.kind().as_str().into(),
            params: Params::from(&o.spec.problem),
            method: o.spec.method.as_str().into(),
            n: o.n,
            eps: o.config.eps,
            status: o.report.status.as_str().into(),
            iterations: o.report.iterations,
            fevals: o.report.fevals,
            final_residual_norm: o.report.final_residual_norm,
            elapsed_seconds: round_ms(o.elapsed_seconds),
            config_echo: ConfigEcho::from(&o.config),
        }
    }
}

pub fn write_report<W: Write>(out: W, report: &RunReport) -> serde_json::Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out).map_err(serde_json::Error::io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub residual_norm: f64,
    pub cumulative_fevals: usize,
    pub elapsed_seconds: f64,
    /// `start`, `trial` or `accelerated`.
    pub branch: String,
}

pub fn trace_rows(o: &RunOutcome) -> Vec<TraceRow> {
    o.report
        .trace
        .iter()
        .map(|e| TraceRow {
            k: e.k,
            residual_norm: e.residual_norm,
            cumulative_fevals: e.cumulative_fevals,
            elapsed_seconds: round_ms(e.elapsed_seconds),
            branch: e.step.map_or("start", |s| s.branch.as_str()).into(),
        })
        .collect()
}

/// One line of a `compare` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub problem: String,
    pub n_p: Option<usize>,
    pub theta: Option<f64>,
    pub n: usize,
    pub method: String,
    pub status: String,
    pub iterations: usize,
    pub fevals: usize,
    pub final_residual_norm: f64,
    pub elapsed_seconds: f64,
}

impl From<&RunOutcome> for CompareRow {
    fn from(o: &RunOutcome) -> Self {
        let (n_p, theta) = match o.spec.problem {
            ProblemSpec::Bratu2d { n_p, theta } | ProblemSpec::Bratu3d { n_p, theta } => (Some(n_p), Some(theta)),
            ProblemSpec::Linear { .. } => (None, None),
        };
        CompareRow {
            problem: o.spec.problem.kind().as_str().into(),
            n_p,
            theta,
            n: o.n,
            method: o.spec.method.as_str().into(),
            status: o.report.status.as_str().into(),
            iterations: o.report.iterations,
            fevals: o.report.fevals,
            final_residual_norm: o.report.final_residual_norm,
            elapsed_seconds: round_ms(o.elapsed_seconds),
        }
    }
}

/// One line of a `sweep-p` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub iterations: usize,
    pub fevals: usize,
    pub time: f64,
    pub status: String,
}

impl From<&RunOutcome> for SweepRow {
    fn from(o: &RunOutcome) -> Self {
        SweepRow {
            p: o.spec.params.depth,
            iterations: o.report.iterations,
            fevals: o.report.fevals,
            time: round_ms(o.elapsed_seconds),
            status: o.report.status.as_str().into(),
        }
    }
}

pub fn write_csv<W: Write, R: Serialize>(out: W, rows: &[R]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Process exit code for a finished solve.
pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        s if s.is_budget() => 2,
        _ => 1,
    }
}
