//! Command-line interface. Exit codes: 0 converged, 1 configuration or
//! evaluation failure, 2 budget exhausted, 64 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfsane_core::problems::ProblemKind;
use dfsane_core::SigmaStrategy;

use crate::output::{self, CompareRow, RunReport, SweepRow};
use crate::runner::{execute_all, RunError, RunOutcome};
use crate::spec::{Method, MethodParams, ProblemSpec, RunSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_BUDGET: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "dfsane-bench", version, about = "Run and compare derivative-free residual solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and write a JSON report.
    Run(RunArgs),
    /// Solve every (instance, method) combination and write a CSV table.
    Compare(CompareArgs),
    /// Solve one instance for several acceleration depths p.
    #[command(name = "sweep-p")]
    SweepP(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Bratu2d,
    Bratu3d,
    Linear,
}

impl From<ProblemArg> for ProblemKind {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Bratu2d => ProblemKind::Bratu2d,
            ProblemArg::Bratu3d => ProblemKind::Bratu3d,
            ProblemArg::Linear => ProblemKind::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmaArg {
    Conservative,
    Spectral,
}

/// Settings shared by every subcommand.
#[derive(Debug, Args)]
struct SolverArgs {
    /// Anderson mixing parameter.
    #[arg(long, default_value_t = 5e-5, allow_hyphen_values = true)]
    beta: f64,
    /// Initial step scale (default: 1 for bratu3d, 0.01 otherwise).
    #[arg(long, allow_hyphen_values = true)]
    h_init: Option<f64>,
    /// Probe step after a rank drop (default: 0.1 for bratu3d, 1e-4 otherwise).
    #[arg(long, allow_hyphen_values = true)]
    h_small: Option<f64>,
    /// Probe step on restart (default: 0.1).
    #[arg(long, allow_hyphen_values = true)]
    h_large: Option<f64>,
    /// Stopping tolerance is eps-scale * sqrt(n).
    #[arg(long, default_value_t = 1e-6, allow_hyphen_values = true)]
    eps_scale: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1_000_000)]
    max_fevals: usize,
    /// Overrides the method's sigma rule.
    #[arg(long, value_enum)]
    sigma_strategy: Option<SigmaArg>,
    /// Seed of the random-direction safeguard.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enable the random-direction safeguard for steps shorter than this.
    #[arg(long, allow_hyphen_values = true)]
    alpha_small: Option<f64>,
}

impl SolverArgs {
    fn params(&self, depth: usize) -> MethodParams {
        MethodParams {
            depth,
            beta: self.beta,
            h_init: self.h_init,
            h_small: self.h_small,
            h_large: self.h_large,
            eps_scale: self.eps_scale,
            max_iters: self.max_iter,
            max_fevals: self.max_fevals,
            sigma_strategy: self.sigma_strategy.map(|s| match s {
                SigmaArg::Conservative => SigmaStrategy::Conservative,
                SigmaArg::Spectral => SigmaStrategy::Spectral,
            }),
            seed: self.seed,
            alpha_small: self.alpha_small,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Grid points per axis (Bratu).
    #[arg(long)]
    np: Option<usize>,
    /// Dimension (linear).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, value_enum, default_value = "accel-dfsane")]
    method: Method,
    /// Acceleration depth.
    #[arg(long, default_value_t = 5)]
    p: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the convergence trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    problem: Vec<ProblemArg>,
    /// Comma-separated grid sizes (Bratu).
    #[arg(long, value_delimiter = ',')]
    np: Vec<usize>,
    /// Comma-separated dimensions (linear).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-100")]
    theta: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "accel-dfsane,dfsane")]
    method: Vec<Method>,
    #[arg(long, default_value_t = 5)]
    p: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Number of concurrent runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, value_enum, default_value = "accel-dfsane")]
    method: Method,
    /// Depths to try: a comma-separated list of values and `a-b` ranges.
    #[arg(long, value_parser = parse_p_list)]
    p: PList,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PList(Vec<usize>);

fn parse_p_list(s: &str) -> Result<PList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let bad = || format!("invalid depth `{part}`");
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err("no depths given".into());
    }
    Ok(PList(out))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) | CliError::Io { .. } => EXIT_FAILURE,
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Spec(e) => CliError::Usage(e.to_string()),
            RunError::Config(e) => CliError::Failure(format!("invalid configuration: {e}")),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, out, err),
        Command::Compare(a) => cmd_compare(a, out),
        Command::SweepP(a) => cmd_sweep(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

/// Validates every spec (problem construction and solver configuration)
/// before anything runs.
fn validate(specs: &[RunSpec]) -> Result<(), CliError> {
    for s in specs {
        let problem = s.problem.build().map_err(|e| CliError::Usage(e.to_string()))?;
        s.config(problem.dim())
            .validate()
            .map_err(|e| CliError::Failure(format!("invalid configuration: {e}")))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.map_or_else(|| "<stdout>".into(), |p| p.display().to_string()),
        source,
    }
}

fn csv_err(path: Option<&Path>) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| io_err(path)(e.into())
}

fn write_table<R: serde::Serialize>(path: Option<&Path>, out: &mut dyn Write, rows: &[R]) -> Result<(), CliError> {
    match path {
        Some(p) => output::write_csv(create(p)?, rows).map_err(csv_err(path)),
        None => output::write_csv(out, rows).map_err(csv_err(path)),
    }
}

fn cmd_run(a: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let problem = ProblemSpec::new(a.problem.into(), a.np, a.n, a.theta).map_err(|e| CliError::Usage(e.to_string()))?;
    let spec = RunSpec {
        problem,
        method: a.method,
        params: a.solver.params(a.p),
    };
    validate(std::slice::from_ref(&spec))?;
    let outcome = crate::runner::execute(&spec)?;

    let report = RunReport::from(&outcome);
    match &a.json {
        Some(p) => output::write_report(create(p)?, &report).map_err(|e| io_err(Some(p))(e.into()))?,
        None => output::write_report(&mut *out, &report).map_err(|e| io_err(None)(e.into()))?,
    }
    if let Some(p) = &a.trace {
        output::write_csv(create(p)?, &output::trace_rows(&outcome)).map_err(csv_err(Some(p)))?;
    }
    let _ = writeln!(
        err,
        "{}: {} iterations, {} fevals, |F| = {:.3e} (eps {:.3e}), {:.3} s",
        report.status, report.iterations, report.fevals, report.final_residual_norm, report.eps, report.elapsed_seconds
    );
    Ok(output::exit_code(outcome.report.status))
}

fn worst_code(outcomes: &[RunOutcome]) -> u8 {
    let codes = outcomes.iter().map(|o| output::exit_code(o.report.status));
    codes.fold(EXIT_OK, |acc, c| match (acc, c) {
        (EXIT_FAILURE, _) | (_, EXIT_FAILURE) => EXIT_FAILURE,
        (EXIT_BUDGET, _) | (_, EXIT_BUDGET) => EXIT_BUDGET,
        _ => EXIT_OK,
    })
}

fn collect(results: Vec<Result<RunOutcome, RunError>>) -> Result<Vec<RunOutcome>, CliError> {
    results.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut specs = Vec::new();
    for &problem in &a.problem {
        let instances: Vec<ProblemSpec> = match problem {
            ProblemArg::Linear => a.n.iter().map(|&n| ProblemSpec::Linear { n }).collect(),
            ProblemArg::Bratu2d | ProblemArg::Bratu3d => {
                if a.np.is_empty() {
                    return Err(CliError::Usage(format!("--np is required for {}", ProblemKind::from(problem))));
                }
                let mut v = Vec::new();
                for &n_p in &a.np {
                    for &theta in &a.theta {
                        v.push(ProblemSpec::new(problem.into(), Some(n_p), None, theta).expect("grid given"));
                    }
                }
                v
            }
        };
        if instances.is_empty() {
            return Err(CliError::Usage("--n is required for linear".into()));
        }
        for instance in instances {
            for &method in &a.method {
                specs.push(RunSpec {
                    problem: instance,
                    method,
                    params: a.solver.params(a.p),
                });
            }
        }
    }
    if specs.is_empty() {
        return Err(CliError::Usage("empty sweep".into()));
    }
    validate(&specs)?;
    let outcomes = collect(execute_all(&specs, a.workers))?;
    let rows: Vec<CompareRow> = outcomes.iter().map(CompareRow::from).collect();
    write_table(a.csv.as_deref(), out, &rows)?;
    Ok(worst_code(&outcomes))
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let problem = ProblemSpec::new(a.problem.into(), a.np, a.n, a.theta).map_err(|e| CliError::Usage(e.to_string()))?;
    let specs: Vec<RunSpec> = a
        .p
        .0
        .iter()
        .map(|&p| RunSpec {
            problem,
            method: a.method,
            params: a.solver.params(p),
        })
        .collect();
    validate(&specs)?;
    let outcomes = collect(execute_all(&specs, a.workers))?;
    let rows: Vec<SweepRow> = outcomes.iter().map(SweepRow::from).collect();
    write_table(a.csv.as_deref(), out, &rows)?;
    Ok(worst_code(&outcomes))
}
