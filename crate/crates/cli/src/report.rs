//! Text, CSV and JSON renderings of solver output.

use std::io::{self, Write};
use std::path::Path;

use pasa_core::{
    lemma_ratios, snapshot, Branch, IterateTrace, KnownSolution, PasaParams, Phase, ProjectionResult, SolveResult,
    StationaritySnapshot,
};
use serde::{Deserialize, Serialize};

use crate::{CliError, ProblemFile};

/// Reals in text output: ten significant digits, no negative zero.
fn num(v: f64) -> String {
    format!("{:.9e}", v + 0.0)
}

fn vector(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|&x| num(x)).collect();
    format!("[{}]", cells.join(", "))
}

fn indices(v: &[usize]) -> String {
    let cells: Vec<String> = v.iter().map(|i| i.to_string()).collect();
    format!("[{}]", cells.join(", "))
}

pub(crate) fn print_solve(out: &mut dyn Write, r: &SolveResult) -> io::Result<()> {
    writeln!(out, "status: {}", r.status.as_str())?;
    writeln!(out, "iterations: {}", r.stats.iterations)?;
    writeln!(out, "x: {}", vector(&r.x))?;
    writeln!(out, "f: {}", num(r.f))?;
    writeln!(out, "E: {}", num(r.global_error))?;
    writeln!(
        out,
        "phase steps: {} / {}",
        r.stats.phase_one_steps, r.stats.phase_two_steps
    )?;
    writeln!(
        out,
        "branches: 12 x{}, 21 x{}",
        r.stats.branches_one_to_two, r.stats.branches_two_to_one
    )
}

pub(crate) fn print_projection(out: &mut dyn Write, p: &ProjectionResult) -> io::Result<()> {
    writeln!(out, "point: {}", vector(&p.point))?;
    writeln!(out, "multipliers: {}", vector(&p.multipliers))?;
    writeln!(out, "active: {}", indices(&p.active_at_point))?;
    writeln!(out, "kkt residual: {}", num(p.kkt_residual))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct CheckReport {
    x: Vec<f64>,
    f: f64,
    #[serde(rename = "E")]
    global_error: f64,
    #[serde(rename = "e")]
    local_error: f64,
    active: Vec<usize>,
    undecided: Vec<usize>,
    multipliers: Vec<f64>,
}

impl From<&StationaritySnapshot> for CheckReport {
    fn from(s: &StationaritySnapshot) -> Self {
        Self {
            x: s.x.clone(),
            f: s.value,
            global_error: s.global_error,
            local_error: s.local_error,
            active: s.active.clone(),
            undecided: s.undecided.clone(),
            multipliers: s.lambda.clone(),
        }
    }
}

pub(crate) fn print_check(out: &mut dyn Write, s: &StationaritySnapshot) -> io::Result<()> {
    writeln!(out, "x: {}", vector(&s.x))?;
    writeln!(out, "f: {}", num(s.value))?;
    writeln!(out, "E: {}", num(s.global_error))?;
    writeln!(out, "e: {}", num(s.local_error))?;
    writeln!(out, "active: {}", indices(&s.active))?;
    writeln!(out, "undecided: {}", indices(&s.undecided))?;
    writeln!(out, "multipliers: {}", vector(&s.lambda))
}

/// One line of the trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub phase: Phase,
    pub f: f64,
    #[serde(rename = "E")]
    pub global_error: f64,
    #[serde(rename = "e")]
    pub local_error: f64,
    pub theta: f64,
    pub step: f64,
    pub n_active: usize,
    pub n_undecided: usize,
    pub branch: Branch,
}

impl From<&IterateTrace> for TraceRow {
    fn from(t: &IterateTrace) -> Self {
        Self {
            iter: t.iter,
            phase: t.phase,
            f: t.f,
            global_error: t.global_error,
            local_error: t.local_error,
            theta: t.theta,
            step: t.step,
            n_active: t.n_active,
            n_undecided: t.n_undecided,
            branch: t.branch,
        }
    }
}

pub fn trace_rows(trace: &[IterateTrace]) -> Vec<TraceRow> {
    trace.iter().map(TraceRow::from).collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], empty_header: &str) -> Result<(), CliError> {
    let file_err = |e: &dyn std::fmt::Display| CliError::Output(format!("{}: {e}", path.display()));
    if rows.is_empty() {
        return std::fs::write(path, format!("{empty_header}\n")).map_err(|e| file_err(&e));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| file_err(&e))?;
    for row in rows {
        w.serialize(row).map_err(|e| file_err(&e))?;
    }
    w.flush().map_err(|e| file_err(&e))
}

pub(crate) fn write_trace(path: &Path, trace: &[IterateTrace]) -> Result<(), CliError> {
    write_csv(
        path,
        &trace_rows(trace),
        "iter,phase,f,E,e,theta,step,n_active,n_undecided,branch",
    )
}

/// One line of the diagnostics CSV. Empty cells mark undefined ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub iter: usize,
    pub distance: f64,
    pub anchor_gap: Option<f64>,
    pub gap_ratio: Option<f64>,
    pub bound_ratio: Option<f64>,
    pub gap_ratio_max: f64,
    pub bound_ratio_max: f64,
}

/// Diagnostics against the final iterate, with the strongly active rows
/// taken from the multipliers there.
pub fn diagnostics_rows(
    problem: &ProblemFile,
    result: &SolveResult,
    params: &PasaParams,
) -> Result<Vec<DiagnosticsRow>, CliError> {
    let tol = params.tolerances();
    let fin = snapshot(
        &problem.objective,
        &problem.poly,
        &result.x,
        params.gamma,
        params.beta,
        &tol,
    )?;
    let active_plus: Vec<usize> = fin.active.iter().copied().filter(|&i| fin.lambda[i] > 0.0).collect();
    let reference = KnownSolution {
        degenerate: active_plus.len() < fin.active.len(),
        x_star: result.x.clone(),
        multipliers: fin.lambda.clone(),
        active_plus,
        sigma: None,
        pi: None,
    };
    let d = lemma_ratios(&result.trace, &reference, &problem.objective, &problem.poly, &tol)?;
    Ok(d.iterates
        .iter()
        .enumerate()
        .map(|(k, it)| DiagnosticsRow {
            iter: it.iter,
            distance: it.distance,
            anchor_gap: it.anchor_gap,
            gap_ratio: it.gap_ratio,
            bound_ratio: it.bound_ratio,
            gap_ratio_max: d.gap_ratio_running_max[k],
            bound_ratio_max: d.bound_ratio_running_max[k],
        })
        .collect())
}

pub(crate) fn write_diagnostics(
    path: &Path,
    problem: &ProblemFile,
    result: &SolveResult,
    params: &PasaParams,
) -> Result<(), CliError> {
    write_csv(
        path,
        &diagnostics_rows(problem, result, params)?,
        "iter,distance,anchor_gap,gap_ratio,bound_ratio,gap_ratio_max,bound_ratio_max",
    )
}
