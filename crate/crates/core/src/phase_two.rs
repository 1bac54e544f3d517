//! Linearly constrained optimizer on a face of the polyhedron.
//!
//! Every step is a monotone Armijo search that keeps the iterate on the
//! current face. The face only grows: rows that become active are pinned to
//! equality. The first step after entering phase two is the projected-arc
//! search `x⁺ = P_face(x − α ηʲ g^A(x))`.
//!
//! Two face solvers are available. [`FaceSolver::ProjectedGradient`] steps
//! along `P_face(x − α g^A) − x`. [`FaceSolver::QuasiNewton`] applies a
//! limited-memory BFGS approximation inside the null space of the face
//! rows, truncates the step at the first blocking constraint, and falls
//! back to the gradient direction when the quasi-Newton direction is not a
//! clear descent direction. Memory is discarded whenever the face grows.

use serde::{Deserialize, Serialize};

use crate::driver::PasaParams;
use crate::error::{check_len, PasaError, Result};
use crate::linalg::{axpy, dot, norm, null_space_project, sub, DenseMatrix};
use crate::phase_one::{armijo_chord, sufficient_decrease, GpaStep};
use crate::polyhedron::{make_face, Face, Polyhedron};
use crate::problems::Objective;
use crate::projection::{null_gradient, project_face_from};

/// Curvature pairs kept by the quasi-Newton face solver.
pub const QN_MEMORY: usize = 5;

/// A face gradient this small relative to the full gradient is rounding
/// left over from the null-space projection.
const FACE_GRADIENT_FLOOR: f64 = 1e-14;

fn face_stationary(g_face: &[f64], g: &[f64]) -> bool {
    norm(g_face) <= FACE_GRADIENT_FLOOR * norm(g)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceSolver {
    ProjectedGradient,
    #[default]
    QuasiNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePair {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcoState {
    pub face: Face,
    pub x: Vec<f64>,
    /// Startup step already taken.
    pub started: bool,
    /// Steps in a row that left the active set unchanged.
    pub consecutive_same_active: usize,
    /// Quasi-Newton memory on the current face, oldest first.
    pub memory: Vec<CurvaturePair>,
    /// Previous iterate and its face gradient, kept while the face is unchanged.
    pub previous: Option<(Vec<f64>, Vec<f64>)>,
}

/// Projected-arc Armijo step on the face of rows active at `x`.
pub fn lco_startup_step(obj: &dyn Objective, poly: &Polyhedron, x: &[f64], params: &PasaParams) -> Result<GpaStep> {
    check_len("lco_startup_step (x)", poly.dim(), x.len())?;
    let tol = params.tolerances();
    let active = poly.active_set(x, tol.act)?;
    let face = make_face(poly, &active)?;
    let g = obj.gradient(x);
    let g_face = null_gradient(poly, &active, &g)?;
    let fx = obj.value(x);
    if face_stationary(&g_face, &g) {
        // The null step passes the test with equality; no search needed.
        return Ok(GpaStep {
            x_next: x.to_vec(),
            step: params.alpha,
            direction: vec![0.0; x.len()],
            backtracks: 0,
            f_next: fx,
            evaluations: 1,
        });
    }

    let mut s = params.alpha;
    for j in 0..=params.backtrack_cap {
        let z: Vec<f64> = x.iter().zip(&g_face).map(|(xi, gi)| xi - s * gi).collect();
        let trial = project_face_from(&face, &z, Some(x), &tol)?.point;
        let ft = obj.value(&trial);
        let d = sub(&trial, x);
        if sufficient_decrease(obj, fx, ft, &g, &trial, &d, 1.0, params.delta) {
            return Ok(GpaStep {
                x_next: trial,
                step: s,
                direction: d,
                backtracks: j,
                f_next: ft,
                evaluations: j + 1,
            });
        }
        s *= params.eta;
    }
    Err(PasaError::LineSearchFailure {
        backtracks: params.backtrack_cap,
    })
}

impl LcoState {
    /// Enters phase two at `x`: takes the startup step and pins every row
    /// active at either endpoint.
    pub fn start(obj: &dyn Objective, poly: &Polyhedron, x: &[f64], params: &PasaParams) -> Result<(Self, GpaStep)> {
        let tol = params.tolerances();
        let step = lco_startup_step(obj, poly, x, params)?;
        let before = poly.active_set(x, tol.act)?;
        let mut face = make_face(poly, &before)?;
        let after = poly.active_set(&step.x_next, tol.act)?;
        face.extend_equalities(&after)?;
        let state = Self {
            face,
            x: step.x_next.clone(),
            started: true,
            consecutive_same_active: usize::from(after == before),
            memory: Vec::new(),
            previous: None,
        };
        Ok((state, step))
    }

    /// A started state at `x` on `face` with empty memory.
    pub fn on_face(face: Face, x: Vec<f64>) -> Self {
        Self {
            face,
            x,
            started: true,
            consecutive_same_active: 0,
            memory: Vec::new(),
            previous: None,
        }
    }
}

/// `−H g` for the limited-memory inverse Hessian built from `memory`.
fn two_loop(memory: &[CurvaturePair], g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut coef = Vec::with_capacity(memory.len());
    for p in memory.iter().rev() {
        let a = dot(&p.s, &q) / dot(&p.s, &p.y);
        axpy(-a, &p.y, &mut q);
        coef.push(a);
    }
    if let Some(p) = memory.last() {
        let h0 = dot(&p.s, &p.y) / dot(&p.y, &p.y);
        q.iter_mut().for_each(|v| *v *= h0);
    }
    for (p, a) in memory.iter().zip(coef.into_iter().rev()) {
        let b = dot(&p.y, &q) / dot(&p.s, &p.y);
        axpy(a - b, &p.s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Largest `s` keeping `x + s d` inside every inequality row off the face.
fn max_feasible_step(poly: &Polyhedron, face: &Face, x: &[f64], d: &[f64]) -> Result<f64> {
    let res = poly.residual(x)?;
    let ad = poly.a().mul_vec(d)?;
    Ok((0..poly.n_constraints())
        .filter(|&i| !face.is_equality(i) && ad[i] > 0.0)
        .map(|i| (-res[i]).max(0.0) / ad[i])
        .fold(f64::INFINITY, f64::min))
}

fn gradient_step(
    obj: &dyn Objective,
    state: &LcoState,
    rows: &DenseMatrix,
    g: &[f64],
    g_face: &[f64],
    fx: f64,
    params: &PasaParams,
) -> Result<GpaStep> {
    let tol = params.tolerances();
    let x = &state.x;
    // Barzilai-Borwein scale from the newest pair; a fixed step zig-zags
    // across narrow valleys at the rate 1 − α·curvature.
    let scale = state
        .memory
        .last()
        .map(|p| dot(&p.s, &p.s) / dot(&p.s, &p.y))
        .filter(|v| v.is_finite() && *v > 0.0)
        .unwrap_or(params.alpha);
    let z: Vec<f64> = x.iter().zip(g_face).map(|(xi, gi)| xi - scale * gi).collect();
    let target = project_face_from(&state.face, &z, Some(x), &tol)?.point;
    let mut d = sub(&target, x);
    // Both ends lie on the face, so any normal component is rounding; left in,
    // it meets the large normal part of g and fakes descent.
    if rows.rows() > 0 {
        d = null_space_project(rows, &d)?;
    }
    if d.iter().all(|&v| v == 0.0) {
        return Err(PasaError::ZeroDirection);
    }
    armijo_chord(obj, x, fx, g, d, params)
}

fn quasi_newton_step(
    obj: &dyn Objective,
    poly: &Polyhedron,
    state: &LcoState,
    rows: &DenseMatrix,
    g: &[f64],
    g_face: &[f64],
    fx: f64,
    params: &PasaParams,
) -> Result<GpaStep> {
    let x = &state.x;
    let mut d = if state.memory.is_empty() {
        Vec::new()
    } else {
        null_space_project(rows, &two_loop(&state.memory, g_face))?
    };
    let usable = !d.is_empty() && d.iter().all(|v| v.is_finite()) && dot(g, &d) <= -1e-10 * norm(g_face) * norm(&d);
    if !usable {
        d = g_face.iter().map(|v| -params.alpha * v).collect();
    }
    if d.iter().all(|&v| v == 0.0) {
        return Err(PasaError::ZeroDirection);
    }
    let first = max_feasible_step(poly, &state.face, x, &d)?.min(1.0);
    if !(first > 0.0) {
        return gradient_step(obj, state, rows, g, g_face, fx, params);
    }
    let mut s = first;
    for j in 0..=params.backtrack_cap {
        let mut trial = x.clone();
        axpy(s, &d, &mut trial);
        let ft = obj.value(&trial);
        if sufficient_decrease(obj, fx, ft, g, &trial, &d, s, params.delta) {
            return Ok(GpaStep {
                x_next: trial,
                step: s,
                direction: d,
                backtracks: j,
                f_next: ft,
                evaluations: j + 1,
            });
        }
        s *= params.eta;
    }
    Err(PasaError::LineSearchFailure {
        backtracks: params.backtrack_cap,
    })
}

/// One step on the current face with the solver chosen in `params`.
pub fn lco_step(
    obj: &dyn Objective,
    poly: &Polyhedron,
    state: &LcoState,
    params: &PasaParams,
) -> Result<(LcoState, GpaStep)> {
    if !state.started {
        return Err(PasaError::InvalidInput("phase two step before startup step".into()));
    }
    let x = &state.x;
    check_len("lco_step (x)", poly.dim(), x.len())?;
    let tol = params.tolerances();
    let g = obj.gradient(x);
    let fx = obj.value(x);
    let rows = poly.a().select_rows(state.face.equality_rows());
    let g_face = null_space_project(&rows, &g)?;
    if face_stationary(&g_face, &g) {
        return Err(PasaError::ZeroDirection);
    }

    let mut memory = state.memory.clone();
    if let Some((xp, gp)) = &state.previous {
        let (s, y) = (sub(x, xp), sub(&g_face, gp));
        if dot(&s, &y) > 1e-10 * norm(&s) * norm(&y) {
            memory.push(CurvaturePair { s, y });
            if memory.len() > QN_MEMORY {
                memory.remove(0);
            }
        }
    }
    let probe = LcoState {
        memory,
        ..state.clone()
    };
    let step = match params.face_solver {
        FaceSolver::ProjectedGradient => gradient_step(obj, &probe, &rows, &g, &g_face, fx, params)?,
        FaceSolver::QuasiNewton => quasi_newton_step(obj, poly, &probe, &rows, &g, &g_face, fx, params)?,
    };

    let before = poly.active_set(x, tol.act)?;
    let after = poly.active_set(&step.x_next, tol.act)?;
    let mut face = state.face.clone();
    face.extend_equalities(&after)?;
    let grew = face.equality_rows().len() > state.face.equality_rows().len();
    let next = LcoState {
        face,
        x: step.x_next.clone(),
        started: true,
        consecutive_same_active: if after == before {
            state.consecutive_same_active + 1
        } else {
            0
        },
        memory: if grew { Vec::new() } else { probe.memory },
        previous: (!grew).then(|| (x.clone(), g_face)),
    };
    Ok((next, step))
}
