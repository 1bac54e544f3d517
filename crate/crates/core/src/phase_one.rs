//! Gradient projection step with Armijo backtracking along the chord to
//! `y(x, α)`.

use serde::{Deserialize, Serialize};

use crate::driver::PasaParams;
use crate::error::{check_len, PasaError, Result};
use crate::linalg::{axpy, dot, sub};
use crate::polyhedron::Polyhedron;
use crate::problems::Objective;
use crate::projection::{null_gradient, project_from};

/// One accepted line-search step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpaStep {
    pub x_next: Vec<f64>,
    /// Accepted step length.
    pub step: f64,
    /// Search direction; for projection-arc searches this is `x_next − x`.
    pub direction: Vec<f64>,
    /// Number of rejected trial steps before acceptance.
    pub backtracks: usize,
    pub f_next: f64,
    /// Objective evaluations spent in the line search.
    pub evaluations: usize,
}

/// Relative size below which a change in `f` is treated as rounding.
const ROUNDING_FLOOR: f64 = 1e-12;

/// Armijo test `f(x + s d) − f(x) ≤ s δ ∇f(x)·d` for the trial `x + s d`.
///
/// When the difference of function values is lost in rounding it is replaced
/// by the trapezoid rule `½ s (∇f(x) + ∇f(x + s d))·d`, which is exact for
/// quadratics. Stored values must still not increase.
pub(crate) fn sufficient_decrease(
    obj: &dyn Objective,
    fx: f64,
    ft: f64,
    g: &[f64],
    trial: &[f64],
    d: &[f64],
    s: f64,
    delta: f64,
) -> bool {
    let bound = s * delta * dot(g, d);
    let diff = ft - fx;
    if diff.abs() > ROUNDING_FLOOR * (1.0 + fx.abs()) {
        return diff <= bound;
    }
    let gt = obj.gradient(trial);
    ft <= fx && 0.5 * s * (dot(g, d) + dot(&gt, d)) <= bound
}

/// Backtracks `s = η^j` until `f(x + s d) ≤ f(x) + s δ ∇f(x)·d`.
pub(crate) fn armijo_chord(
    obj: &dyn Objective,
    x: &[f64],
    fx: f64,
    g: &[f64],
    d: Vec<f64>,
    params: &PasaParams,
) -> Result<GpaStep> {
    let mut s = 1.0;
    for j in 0..=params.backtrack_cap {
        let mut trial = x.to_vec();
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

/// One iteration of the gradient projection algorithm from a feasible `x`.
///
/// Returns [`PasaError::ZeroDirection`] when `y(x, α) = x`.
pub fn gpa_step(obj: &dyn Objective, poly: &Polyhedron, x: &[f64], params: &PasaParams) -> Result<GpaStep> {
    check_len("gpa_step (x)", poly.dim(), x.len())?;
    let tol = params.tolerances();
    let g = obj.gradient(x);
    let fx = obj.value(x);
    let z: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - params.alpha * gi).collect();
    let y = project_from(poly, &z, Some(x), &tol)?.point;
    let mut d = sub(&y, x);
    // Rows active at both ends are exactly orthogonal to d; strip the
    // rounding left along them so it cannot swamp the slope near a solution.
    let at_y = poly.active_set(&y, tol.act)?;
    let shared: Vec<usize> = poly
        .active_set(x, tol.act)?
        .into_iter()
        .filter(|i| at_y.contains(i))
        .collect();
    if !shared.is_empty() {
        d = null_gradient(poly, &shared, &d)?;
    }
    if d.iter().all(|&v| v == 0.0) {
        return Err(PasaError::ZeroDirection);
    }
    armijo_chord(obj, x, fx, &g, d, params)
}
