//! Run inspection against a known solution: how far each iterate is from
//! the face of strongly active constraints, and how distance to the
//! solution compares with the global error.
//!
//! Test-only tooling; the solver never looks at the solution.

use serde::{Deserialize, Serialize};

use crate::driver::{Branch, IterateTrace, Phase};
use crate::error::{check_len, PasaError, Result};
use crate::linalg::{distance, least_squares_min_norm, norm, sub};
use crate::measures::global_error;
use crate::polyhedron::{Polyhedron, Tolerances};
use crate::problems::{KnownSolution, Objective};

/// Distances below this are treated as "at the solution" and produce no
/// ratio; rounding dominates there.
pub const RATIO_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateDiagnostics {
    pub iter: usize,
    /// `‖x_k − x*‖`.
    pub distance: f64,
    /// Distance to the anchor on the strongly active face; `None` if that
    /// affine system is inconsistent.
    pub anchor_gap: Option<f64>,
    /// `anchor_gap / distance²`.
    pub gap_ratio: Option<f64>,
    /// `distance / E(x_k)`.
    pub bound_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub iterates: Vec<IterateDiagnostics>,
    pub gap_ratio_running_max: Vec<f64>,
    pub bound_ratio_running_max: Vec<f64>,
    pub phase_one_rows: usize,
    pub phase_two_rows: usize,
    pub branches_one_to_two: usize,
    pub branches_two_to_one: usize,
}

/// Closest point to `x` on `{y : a_i·y = b_i for i ∈ plus_set ∪ A(x)}`.
pub fn face_anchor(poly: &Polyhedron, x: &[f64], plus_set: &[usize], tol: &Tolerances) -> Result<Vec<f64>> {
    check_len("face_anchor (x)", poly.dim(), x.len())?;
    if let Some(&i) = plus_set.iter().find(|&&i| i >= poly.n_constraints()) {
        return Err(PasaError::InvalidInput(format!("row index {i} out of range")));
    }
    let mut rows: Vec<usize> = plus_set.to_vec();
    rows.extend(poly.active_set(x, tol.act)?);
    rows.sort_unstable();
    rows.dedup();
    if rows.is_empty() {
        return Ok(x.to_vec());
    }
    let m = poly.a().select_rows(&rows);
    let ax = m.mul_vec(x)?;
    let r: Vec<f64> = rows.iter().zip(&ax).map(|(&i, v)| poly.b()[i] - v).collect();
    let shift = least_squares_min_norm(&m, &r)?;
    let miss = norm(&sub(&m.mul_vec(&shift)?, &r));
    if miss > 1e-9 * (1.0 + norm(&r)) {
        return Err(PasaError::Inconsistent { residual: miss });
    }
    Ok(x.iter().zip(&shift).map(|(a, b)| a + b).collect())
}

fn running_max(values: impl Iterator<Item = Option<f64>>) -> Vec<f64> {
    let mut best = 0.0f64;
    values
        .map(|v| {
            if let Some(v) = v {
                best = best.max(v);
            }
            best
        })
        .collect()
}

/// Per-iterate distances and ratios along a recorded run.
pub fn lemma_ratios(
    trace: &[IterateTrace],
    sol: &KnownSolution,
    obj: &dyn Objective,
    poly: &Polyhedron,
    tol: &Tolerances,
) -> Result<RunDiagnostics> {
    check_len("lemma_ratios (solution)", poly.dim(), sol.x_star.len())?;
    let mut iterates = Vec::with_capacity(trace.len());
    for row in trace {
        let dist = distance(&row.x, &sol.x_star);
        let anchor_gap = match face_anchor(poly, &row.x, &sol.active_plus, tol) {
            Ok(anchor) => Some(distance(&row.x, &anchor)),
            Err(PasaError::Inconsistent { .. }) => None,
            Err(e) => return Err(e),
        };
        let resolved = dist > RATIO_FLOOR;
        let gap_ratio = anchor_gap.filter(|_| resolved).map(|g| g / (dist * dist));
        let big_e = global_error(obj, poly, &row.x, tol)?;
        let bound_ratio = (resolved && big_e > 0.0).then(|| dist / big_e);
        iterates.push(IterateDiagnostics {
            iter: row.iter,
            distance: dist,
            anchor_gap,
            gap_ratio,
            bound_ratio,
        });
    }
    let count = |p: Phase| trace.iter().filter(|r| r.phase == p).count();
    let branches = |b: Branch| trace.iter().filter(|r| r.branch == b).count();
    Ok(RunDiagnostics {
        gap_ratio_running_max: running_max(iterates.iter().map(|d| d.gap_ratio)),
        bound_ratio_running_max: running_max(iterates.iter().map(|d| d.bound_ratio)),
        iterates,
        phase_one_rows: count(Phase::One),
        phase_two_rows: count(Phase::Two),
        branches_one_to_two: branches(Branch::OneToTwo),
        branches_two_to_one: branches(Branch::TwoToOne),
    })
}

/// True when the running maximum grew by less than 1 % over the second half
/// of the sequence.
pub fn stabilizes(running_max: &[f64]) -> bool {
    let Some(&overall) = running_max.last() else {
        return true;
    };
    let half = running_max[(running_max.len() - 1) / 2];
    overall <= half * 1.01
}
