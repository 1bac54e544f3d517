//! Stationarity measures: the stepped point `y(x, α) = P_Ω(x − α g(x))`, the
//! direction `d^α(x) = y(x, α) − x`, the global error `E(x) = ‖d¹(x)‖`, the
//! local error `e(x) = ‖g^A(x)‖`, and the undecided index set.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, PasaError, Result};
use crate::linalg::{norm, sub};
use crate::polyhedron::{IndexSet, Polyhedron, Tolerances};
use crate::problems::Objective;
use crate::projection::{null_gradient, project_from, ProjectionResult};

/// Everything the driver needs to know about one iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaritySnapshot {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `y(x, 1)`.
    pub step_point: Vec<f64>,
    /// Global error `E(x)`.
    pub global_error: f64,
    /// Local error `e(x)`.
    pub local_error: f64,
    /// Multipliers of the `α = 1` projection.
    pub lambda: Vec<f64>,
    pub active: IndexSet,
    pub undecided: IndexSet,
}

fn check_x(obj: &dyn Objective, poly: &Polyhedron, x: &[f64]) -> Result<()> {
    check_len("measures (objective dimension)", poly.dim(), obj.dim())?;
    check_len("measures (x)", poly.dim(), x.len())
}

fn step_with_gradient(
    poly: &Polyhedron,
    x: &[f64],
    g: &[f64],
    alpha: f64,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    if !(alpha >= 0.0) {
        return Err(PasaError::InvalidInput(format!(
            "step length must be >= 0, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(ProjectionResult {
            point: x.to_vec(),
            multipliers: vec![0.0; poly.n_constraints()],
            active_at_point: poly.active_set(x, tol.act)?,
            iterations: 0,
            kkt_residual: 0.0,
        });
    }
    let z: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - alpha * gi).collect();
    project_from(poly, &z, Some(x), tol)
}

/// `y(x, α)` together with its multipliers.
pub fn step_point(
    obj: &dyn Objective,
    poly: &Polyhedron,
    x: &[f64],
    alpha: f64,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    check_x(obj, poly, x)?;
    step_with_gradient(poly, x, &obj.gradient(x), alpha, tol)
}

/// `d^α(x) = y(x, α) − x`.
pub fn direction(obj: &dyn Objective, poly: &Polyhedron, x: &[f64], alpha: f64, tol: &Tolerances) -> Result<Vec<f64>> {
    Ok(sub(&step_point(obj, poly, x, alpha, tol)?.point, x))
}

/// `E(x) = ‖d¹(x)‖`.
pub fn global_error(obj: &dyn Objective, poly: &Polyhedron, x: &[f64], tol: &Tolerances) -> Result<f64> {
    Ok(norm(&direction(obj, poly, x, 1.0, tol)?))
}

/// `e(x) = ‖g^A(x)‖`.
pub fn local_error(obj: &dyn Objective, poly: &Polyhedron, x: &[f64], tol: &Tolerances) -> Result<f64> {
    check_x(obj, poly, x)?;
    let active = poly.active_set(x, tol.act)?;
    Ok(norm(&null_gradient(poly, &active, &obj.gradient(x))?))
}

/// `{i : λ_i ≥ E^γ and slack_i ≥ E^β}`; empty when `E = 0`.
pub fn undecided_indices(lambda: &[f64], slack: &[f64], global_error: f64, gamma: f64, beta: f64) -> IndexSet {
    if global_error <= 0.0 {
        return Vec::new();
    }
    let lam_min = global_error.powf(gamma);
    let slack_min = global_error.powf(beta);
    lambda
        .iter()
        .zip(slack)
        .enumerate()
        .filter(|(_, (&l, &s))| l >= lam_min && s >= slack_min)
        .map(|(i, _)| i)
        .collect()
}

/// Undecided set at `x`, using the multipliers of `y(x, 1)`.
pub fn undecided_set(
    obj: &dyn Objective,
    poly: &Polyhedron,
    x: &[f64],
    gamma: f64,
    beta: f64,
    tol: &Tolerances,
) -> Result<IndexSet> {
    Ok(snapshot(obj, poly, x, gamma, beta, tol)?.undecided)
}

/// Computes every measure at `x` from one gradient evaluation and one projection.
pub fn snapshot(
    obj: &dyn Objective,
    poly: &Polyhedron,
    x: &[f64],
    gamma: f64,
    beta: f64,
    tol: &Tolerances,
) -> Result<StationaritySnapshot> {
    check_x(obj, poly, x)?;
    let value = obj.value(x);
    let gradient = obj.gradient(x);
    let proj = step_with_gradient(poly, x, &gradient, 1.0, tol)?;
    let global_error = norm(&sub(&proj.point, x));
    let residual = poly.residual(x)?;
    let (active, _) = poly.classify(&residual, tol.act);
    let local_error = norm(&null_gradient(poly, &active, &gradient)?);
    // Rows judged active have zero slack, so rounding-level gaps cannot
    // make them undecided.
    let mut slack: Vec<f64> = residual.iter().map(|r| -r).collect();
    for &i in &active {
        slack[i] = 0.0;
    }
    let undecided = undecided_indices(&proj.multipliers, &slack, global_error, gamma, beta);
    Ok(StationaritySnapshot {
        x: x.to_vec(),
        value,
        gradient,
        step_point: proj.point,
        global_error,
        local_error,
        lambda: proj.multipliers,
        active,
        undecided,
    })
}
