//! Command-line front end for the polyhedral active set solver.
//!
//! ```text
//! pasa solve   --problem FILE [solver flags] [--trace FILE] [--diagnostics FILE] [--json]
//! pasa project --problem FILE --point "x1 x2 ..." [--json]
//! pasa check   --problem FILE [--point "x1 x2 ..."] [--json]
//! ```
//!
//! Exit codes: 0 success or converged, 1 iteration limit, 2 empty feasible
//! set, 3 input error, 4 line-search or numerical failure.

pub mod problem_file;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pasa_core::{FaceSolver, PasaError, PasaParams, Status};
use thiserror::Error;

pub use problem_file::{emit_problem, parse_problem, ParseError, ProblemFile, ProblemObjective};
pub use report::{diagnostics_rows, trace_rows, DiagnosticsRow, TraceRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MAX_ITER: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid point: {0}")]
    Point(String),
    #[error(transparent)]
    Solver(#[from] PasaError),
    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(PasaError::Infeasible { .. }) => EXIT_INFEASIBLE,
            CliError::Solver(PasaError::NonConvergence { .. } | PasaError::LineSearchFailure { .. }) => EXIT_FAILURE,
            CliError::Output(_) => EXIT_FAILURE,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pasa", version, about = "Minimize a smooth function over {x : Ax <= b}")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver from the file's x0.
    Solve(SolveArgs),
    /// Project a point onto the feasible set and print the multipliers.
    Project(PointArgs),
    /// Print stationarity measures at a point (default: x0).
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaceSolverArg {
    QuasiNewton,
    ProjectedGradient,
}

#[derive(Debug, Args)]
struct SolverFlags {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long = "backtrack-cap")]
    backtrack_cap: Option<usize>,
    #[arg(long = "face-solver", value_enum)]
    face_solver: Option<FaceSolverArg>,
}

impl SolverFlags {
    fn params(&self) -> Result<PasaParams, CliError> {
        let d = PasaParams::default();
        let p = PasaParams {
            eps: self.eps.unwrap_or(d.eps),
            theta0: self.theta.unwrap_or(d.theta0),
            mu: self.mu.unwrap_or(d.mu),
            delta: self.delta.unwrap_or(d.delta),
            eta: self.eta.unwrap_or(d.eta),
            alpha: self.alpha.unwrap_or(d.alpha),
            gamma: self.gamma.unwrap_or(d.gamma),
            beta: self.beta.unwrap_or(d.beta),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            backtrack_cap: self.backtrack_cap.unwrap_or(d.backtrack_cap),
            face_solver: match self.face_solver {
                Some(FaceSolverArg::ProjectedGradient) => FaceSolver::ProjectedGradient,
                Some(FaceSolverArg::QuasiNewton) => FaceSolver::QuasiNewton,
                None => d.face_solver,
            },
            ..d
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    #[command(flatten)]
    flags: SolverFlags,
    /// Write the per-iterate trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write per-iterate distance diagnostics as CSV, using the final
    /// iterate as the reference solution.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Whitespace- or comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    #[command(flatten)]
    flags: SolverFlags,
    #[arg(long)]
    json: bool,
}

fn load(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_point(text: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CliError::Point(format!("`{t}` is not a finite number"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(CliError::Point(format!(
            "expected {n} coordinates, found {}",
            values.len()
        )));
    }
    Ok(values)
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

fn run_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let problem = load(&args.problem)?;
    let params = args.flags.params()?;
    let result = pasa_core::solve(&problem.objective, &problem.poly, &problem.x0, &params)?;
    if let Some(path) = &args.trace {
        report::write_trace(path, &result.trace)?;
    }
    if let Some(path) = &args.diagnostics {
        report::write_diagnostics(path, &problem, &result, &params)?;
    }
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &result).map_err(io_err)?;
        writeln!(out).map_err(io_err)?;
    } else {
        report::print_solve(out, &result).map_err(io_err)?;
    }
    Ok(match result.status {
        Status::Converged => EXIT_OK,
        Status::MaxIter => EXIT_MAX_ITER,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::LineSearchFailure => EXIT_FAILURE,
    })
}

fn run_project(args: &PointArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let problem = load(&args.problem)?;
    let z = parse_point(&args.point, problem.poly.dim())?;
    let proj = pasa_core::project(&problem.poly, &z)?;
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &proj).map_err(io_err)?;
        writeln!(out).map_err(io_err)?;
    } else {
        report::print_projection(out, &proj).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

fn run_check(args: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let problem = load(&args.problem)?;
    let x = match &args.point {
        Some(p) => parse_point(p, problem.poly.dim())?,
        None => problem.x0.clone(),
    };
    let params = args.flags.params()?;
    let violation = problem.poly.max_violation(&x)?;
    if violation > params.feas_tol {
        return Err(CliError::Point(format!(
            "point violates the constraints by {violation:e}"
        )));
    }
    let snap = pasa_core::snapshot(
        &problem.objective,
        &problem.poly,
        &x,
        params.gamma,
        params.beta,
        &params.tolerances(),
    )?;
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &report::CheckReport::from(&snap)).map_err(io_err)?;
        writeln!(out).map_err(io_err)?;
    } else {
        report::print_check(out, &snap).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

/// Runs the command line `argv` (including the program name), writing
/// results to `out` and errors to `err`. Returns the process exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a, out),
        Command::Project(a) => run_project(a, out),
        Command::Check(a) => run_check(a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
