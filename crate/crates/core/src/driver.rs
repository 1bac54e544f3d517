//! The two-phase solver loop.
//!
//! Phase one takes gradient projection steps; phase two runs the face
//! optimizer. At every iterate the local error `e` is compared with `θE`:
//! a large `e` sends the solver to phase two, a small one back to phase
//! one. While in phase one with no undecided constraints and a small `e`,
//! `θ` shrinks by `μ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, PasaError, Result};
use crate::linalg::norm_inf;
use crate::measures::snapshot;
use crate::phase_one::{gpa_step, GpaStep};
use crate::phase_two::{lco_step, FaceSolver, LcoState};
use crate::polyhedron::{Polyhedron, Tolerances, ACT_TOL, FEAS_TOL};
use crate::problems::{gradient_error, kkt_violation, Objective};
use crate::projection::project;

/// Solver parameters. Build with struct update syntax over
/// [`PasaParams::default`] and call [`PasaParams::validate`], or let
/// [`solve`] validate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PasaParams {
    /// Stop once `E(x) ≤ eps`.
    pub eps: f64,
    /// Initial branching threshold, in (0, 1).
    pub theta0: f64,
    /// Decay factor for `θ`, in (0, 1).
    pub mu: f64,
    /// Armijo sufficient-decrease constant, in (0, 1).
    pub delta: f64,
    /// Backtracking factor, in (0, 1).
    pub eta: f64,
    /// Gradient step used to form the projection target, > 0.
    pub alpha: f64,
    /// Multiplier exponent for the undecided test, in (0, 1).
    pub gamma: f64,
    /// Slack exponent for the undecided test, in (1, 2).
    pub beta: f64,
    pub act_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub backtrack_cap: usize,
    pub face_solver: FaceSolver,
    /// Compare the gradient with central differences at the start point.
    pub check_gradient: bool,
}

impl Default for PasaParams {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            theta0: 0.1,
            mu: 0.5,
            delta: 1e-4,
            eta: 0.5,
            alpha: 1.0,
            gamma: 0.5,
            beta: 1.5,
            act_tol: ACT_TOL,
            feas_tol: FEAS_TOL,
            max_iter: 10_000,
            backtrack_cap: 60,
            face_solver: FaceSolver::default(),
            check_gradient: cfg!(debug_assertions),
        }
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(PasaError::InvalidInput(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl PasaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) {
            return Err(PasaError::InvalidInput(format!("eps must be >= 0, got {}", self.eps)));
        }
        open_unit("theta", self.theta0)?;
        open_unit("mu", self.mu)?;
        open_unit("delta", self.delta)?;
        open_unit("eta", self.eta)?;
        open_unit("gamma", self.gamma)?;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(PasaError::InvalidInput(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 1.0 && self.beta < 2.0) {
            return Err(PasaError::InvalidInput(format!(
                "beta must lie in (1, 2), got {}",
                self.beta
            )));
        }
        if !(self.act_tol >= 0.0 && self.feas_tol >= 0.0) {
            return Err(PasaError::InvalidInput("tolerances must be >= 0".into()));
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            act: self.act_tol,
            feas: self.feas_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Phase {
    One,
    Two,
}

impl From<Phase> for u8 {
    fn from(p: Phase) -> u8 {
        match p {
            Phase::One => 1,
            Phase::Two => 2,
        }
    }
}

impl TryFrom<u8> for Phase {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Phase::One),
            2 => Ok(Phase::Two),
            _ => Err(format!("unknown phase {v}")),
        }
    }
}

/// Phase switch taken at an iterate. Serialized as `-`, `12` or `21`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Branch {
    None,
    OneToTwo,
    TwoToOne,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::None => "-",
            Branch::OneToTwo => "12",
            Branch::TwoToOne => "21",
        }
    }
}

impl From<Branch> for String {
    fn from(b: Branch) -> String {
        b.as_str().to_string()
    }
}

impl TryFrom<String> for Branch {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        match s.as_str() {
            "-" => Ok(Branch::None),
            "12" => Ok(Branch::OneToTwo),
            "21" => Ok(Branch::TwoToOne),
            _ => Err(format!("unknown branch {s:?}")),
        }
    }
}

/// One row per iterate. `phase` is the phase that took the step from this
/// iterate; the final row (no step) keeps the phase in effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub iter: usize,
    pub phase: Phase,
    pub f: f64,
    #[serde(rename = "E")]
    pub global_error: f64,
    #[serde(rename = "e")]
    pub local_error: f64,
    pub theta: f64,
    /// Accepted step length; 0 on the final row.
    pub step: f64,
    pub n_active: usize,
    pub n_undecided: usize,
    pub branch: Branch,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Infeasible,
    LineSearchFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Infeasible => "infeasible",
            Status::LineSearchFailure => "line_search_failure",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub phase_one_steps: usize,
    pub phase_two_steps: usize,
    pub branches_one_to_two: usize,
    pub branches_two_to_one: usize,
    pub theta_decays: usize,
    /// Objective evaluations spent in line searches.
    pub line_search_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub f: f64,
    #[serde(rename = "E")]
    pub global_error: f64,
    pub status: Status,
    pub stats: SolveStats,
    pub trace: Vec<IterateTrace>,
}

/// Residual below which a vanished search direction is accepted as a
/// stationary point.
fn kkt_accepts(violation: f64, g: &[f64]) -> bool {
    violation <= 1e-8 * (1.0 + norm_inf(g))
}

/// Minimizes `obj` over `poly` starting from the projection of `x0`.
///
/// Returns `Err` only for invalid input (dimensions, parameters, a
/// gradient that disagrees with finite differences). Runtime outcomes are
/// reported through [`SolveResult::status`].
pub fn solve(obj: &dyn Objective, poly: &Polyhedron, x0: &[f64], params: &PasaParams) -> Result<SolveResult> {
    params.validate()?;
    check_len("solve (objective dimension)", poly.dim(), obj.dim())?;
    check_len("solve (x0)", poly.dim(), x0.len())?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(PasaError::InvalidInput("x0 has non-finite entries".into()));
    }
    let tol = params.tolerances();

    let mut x = match project(poly, x0) {
        Ok(p) => p.point,
        Err(PasaError::Infeasible { .. }) => {
            return Ok(SolveResult {
                x: x0.to_vec(),
                f: obj.value(x0),
                global_error: f64::INFINITY,
                status: Status::Infeasible,
                stats: SolveStats::default(),
                trace: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    if params.check_gradient {
        let err = gradient_error(obj, &x);
        if err > 1e-4 {
            return Err(PasaError::InvalidInput(format!(
                "gradient disagrees with finite differences (relative error {err:.2e})"
            )));
        }
    }

    let mut theta = params.theta0;
    let mut phase = Phase::One;
    let mut face_state: Option<LcoState> = None;
    let mut stats = SolveStats::default();
    let mut trace = Vec::new();

    for iter in 0.. {
        let snap = snapshot(obj, poly, &x, params.gamma, params.beta, &tol)?;
        let (big_e, small_e) = (snap.global_error, snap.local_error);
        let mut row = IterateTrace {
            iter,
            phase,
            f: snap.value,
            global_error: big_e,
            local_error: small_e,
            theta,
            step: 0.0,
            n_active: snap.active.len(),
            n_undecided: snap.undecided.len(),
            branch: Branch::None,
            x: x.clone(),
        };
        let finish = |row: IterateTrace, status: Status, stats: SolveStats, mut trace: Vec<IterateTrace>| {
            trace.push(row);
            SolveResult {
                x: snap.x.clone(),
                f: snap.value,
                global_error: big_e,
                status,
                stats,
                trace,
            }
        };
        if big_e <= params.eps {
            return Ok(finish(row, Status::Converged, stats, trace));
        }
        if iter == params.max_iter {
            return Ok(finish(row, Status::MaxIter, stats, trace));
        }

        if phase == Phase::Two && small_e < theta * big_e {
            phase = Phase::One;
            face_state = None;
            row.branch = Branch::TwoToOne;
            stats.branches_two_to_one += 1;
        } else if phase == Phase::One {
            // On re-entry a gradient projection step comes first; testing
            // again at the same point with a smaller θ would bounce straight
            // back to the face that just stalled.
            if snap.undecided.is_empty() && small_e < theta * big_e {
                theta *= params.mu;
                stats.theta_decays += 1;
            }
            if small_e >= theta * big_e {
                phase = Phase::Two;
                row.branch = Branch::OneToTwo;
                stats.branches_one_to_two += 1;
            }
        }
        row.phase = phase;
        row.theta = theta;

        let outcome: Result<GpaStep> = match phase {
            Phase::One => gpa_step(obj, poly, &x, params),
            Phase::Two => match face_state.take() {
                None => LcoState::start(obj, poly, &x, params).map(|(st, step)| {
                    face_state = Some(st);
                    step
                }),
                Some(st) => lco_step(obj, poly, &st, params).map(|(next, step)| {
                    face_state = Some(next);
                    step
                }),
            },
        };
        let step = match outcome {
            Ok(step) => step,
            Err(PasaError::ZeroDirection) | Err(PasaError::LineSearchFailure { .. }) => {
                let violation = kkt_violation(obj, poly, &x, &snap.lambda)?;
                let status = if kkt_accepts(violation, &snap.gradient) {
                    Status::Converged
                } else {
                    Status::LineSearchFailure
                };
                return Ok(finish(row, status, stats, trace));
            }
            Err(e) => return Err(e),
        };

        match phase {
            Phase::One => stats.phase_one_steps += 1,
            Phase::Two => stats.phase_two_steps += 1,
        }
        stats.iterations += 1;
        stats.line_search_evals += step.evaluations;
        row.step = step.step;
        trace.push(row);
        x = step.x_next;
    }
    unreachable!("the iteration loop only exits by returning")
}
