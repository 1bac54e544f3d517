//! Euclidean projection onto a polyhedron or one of its faces, with
//! Lagrange multiplier recovery.
//!
//! The least-distance problem `min ½‖y − z‖²` subject to `Ay ≤ b` (and
//! equality on the face rows) is solved by a primal active-set method:
//! starting from a feasible point, project onto the affine hull of the
//! working set, walk toward that target until a row blocks, and drop the
//! most negative multiplier once the working-set minimizer is reached.
//!
//! A feasible starting point comes from, in order: `z` itself, a ray from a
//! caller-supplied feasible anchor toward `z`, or an elastic lift that relaxes
//! every row by a scalar `t ≥ 0` whose target value is pushed far negative.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, PasaError, Result};
use crate::linalg::{
    axpy, distance, dot, least_squares_min_norm, norm, norm_inf, null_space_project, sub, DenseMatrix,
};
use crate::polyhedron::{Face, IndexSet, Polyhedron, Tolerances};

/// Multipliers in `[−NEG_CLAMP, 0)` are rounded to zero.
const NEG_CLAMP: f64 = 1e-12;
/// Relative tie window for blocking step lengths and dropped multipliers.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    /// One entry per constraint row; zero on rows free at `point`.
    pub multipliers: Vec<f64>,
    pub active_at_point: IndexSet,
    /// Working-set changes made by the active-set iteration.
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// `P_Ω(z)` with default tolerances and no anchor.
pub fn project(poly: &Polyhedron, z: &[f64]) -> Result<ProjectionResult> {
    project_from(poly, z, None, &Tolerances::default())
}

/// `P_Ω(z)`, using `anchor` (if feasible) to build the starting point.
pub fn project_from(
    poly: &Polyhedron,
    z: &[f64],
    anchor: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    project_impl(poly, &[], z, anchor, tol)
}

/// Projection onto a face, with its equality rows held active throughout.
pub fn project_face(face: &Face, z: &[f64]) -> Result<ProjectionResult> {
    project_face_from(face, z, None, &Tolerances::default())
}

pub fn project_face_from(face: &Face, z: &[f64], anchor: Option<&[f64]>, tol: &Tolerances) -> Result<ProjectionResult> {
    project_impl(face.base(), face.equality_rows(), z, anchor, tol)
}

/// Projection of `g` onto the null space of the rows in `active`.
pub fn null_gradient(poly: &Polyhedron, active: &[usize], g: &[f64]) -> Result<Vec<f64>> {
    check_len("null_gradient", poly.dim(), g.len())?;
    if active.is_empty() {
        return Ok(g.to_vec());
    }
    null_space_project(&poly.a().select_rows(active), g)
}

/// `‖y − z + Aᵀλ‖∞ + ‖min(λ_I, 0)‖∞ + max_I |λ_i (Ay − b)_i|`, with `I` the inequality rows.
pub fn kkt_residual(poly: &Polyhedron, equality_rows: &[usize], z: &[f64], y: &[f64], lambda: &[f64]) -> Result<f64> {
    check_len("kkt_residual (lambda)", poly.n_constraints(), lambda.len())?;
    let mut stat = sub(y, z);
    let atl = poly.a().tr_mul_vec(lambda)?;
    axpy(1.0, &atl, &mut stat);
    let res = poly.residual(y)?;
    let mut sign = 0.0f64;
    let mut comp = 0.0f64;
    for (i, (&l, &r)) in lambda.iter().zip(&res).enumerate() {
        if equality_rows.binary_search(&i).is_ok() {
            continue;
        }
        sign = sign.max(-l.min(0.0));
        comp = comp.max((l * r).abs());
    }
    Ok(norm_inf(&stat) + sign + comp)
}

/// Replaces `y` by the projection of `z` onto the affine hull of the working
/// rows, which is the same point computed without the accumulated rounding
/// of the active-set path. Kept only if it is at least as feasible.
fn polish(poly: &Polyhedron, working: &[usize], z: &[f64], y: Vec<f64>) -> Result<Vec<f64>> {
    if working.is_empty() {
        return Ok(y);
    }
    let rows = poly.a().select_rows(working);
    let az = rows.mul_vec(z)?;
    let gap: Vec<f64> = working.iter().zip(&az).map(|(&i, v)| poly.b()[i] - v).collect();
    let shift = least_squares_min_norm(&rows, &gap)?;
    let cand: Vec<f64> = z.iter().zip(&shift).map(|(a, b)| a + b).collect();
    let worst = |x: &[f64]| -> Result<f64> { Ok(poly.max_violation(x)?.max(0.0)) };
    if cand.iter().all(|v| v.is_finite())
        && worst(&cand)? <= worst(&y)?
        && distance(&cand, &y) <= 1e-8 * (1.0 + norm_inf(&y))
    {
        Ok(cand)
    } else {
        Ok(y)
    }
}

fn project_impl(
    poly: &Polyhedron,
    eq_rows: &[usize],
    z: &[f64],
    anchor: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<ProjectionResult> {
    let n = poly.dim();
    let m = poly.n_constraints();
    check_len("project (z)", n, z.len())?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(PasaError::InvalidInput("projection target must be finite".into()));
    }
    let mut is_eq = vec![false; m];
    for &i in eq_rows {
        if i >= m {
            return Err(PasaError::InvalidInput(format!("row {i} out of range")));
        }
        is_eq[i] = true;
    }

    let in_set = |x: &[f64]| -> Result<bool> {
        let r = poly.residual(x)?;
        Ok(r.iter().enumerate().all(|(i, &ri)| {
            if is_eq[i] {
                ri.abs() <= poly.row_act_tol(i, tol.act)
            } else {
                ri <= tol.feas
            }
        }))
    };

    let start = if in_set(z)? {
        z.to_vec()
    } else if let Some(anchor) = anchor.filter(|a| a.len() == n && in_set(a).unwrap_or(false)) {
        ray_start(poly.a(), poly.b(), &is_eq, z, anchor)?
    } else {
        elastic_start(poly, &is_eq, z, tol)?
    };

    let cap = 50 * (m + 1);
    let sol = solve_least_distance(poly.a(), poly.b(), &is_eq, z, start, cap)?;
    let y = polish(poly, &sol.working, z, sol.point)?;

    let residual = poly.residual(&y)?;
    let (mut active, _) = poly.classify(&residual, tol.act);
    for &i in eq_rows {
        if let Err(pos) = active.binary_search(&i) {
            active.insert(pos, i);
        }
    }

    let zy = sub(z, &y);
    let drop_scale = 1.0 + norm_inf(&zy);
    let mut multipliers = vec![0.0; m];
    let mut usable = !active.is_empty();
    if usable {
        let lam = least_squares_min_norm(&poly.a().select_rows(&active).transpose(), &zy)?;
        for (&i, &l) in active.iter().zip(&lam) {
            if is_eq[i] || l >= 0.0 {
                multipliers[i] = l;
            } else if l >= -NEG_CLAMP * drop_scale {
                multipliers[i] = 0.0;
            } else {
                usable = false;
                break;
            }
        }
    }
    if !usable {
        // Dependent active rows whose min-norm multiplier has a negative entry:
        // fall back to the working-set multipliers, which are nonnegative.
        multipliers.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &l) in sol.working.iter().zip(&sol.working_multipliers) {
            multipliers[i] = if is_eq[i] { l } else { l.max(0.0) };
        }
    }

    let kkt = kkt_residual(poly, eq_rows, z, &y, &multipliers)?;
    Ok(ProjectionResult {
        point: y,
        multipliers,
        active_at_point: active,
        iterations: sol.iterations,
        kkt_residual: kkt,
    })
}

/// Walk from a feasible anchor toward the face-hull target `anchor + P_N(A_E)(z − anchor)`.
fn ray_start(a: &DenseMatrix, b: &[f64], is_eq: &[bool], z: &[f64], anchor: &[f64]) -> Result<Vec<f64>> {
    let eq: Vec<usize> = (0..is_eq.len()).filter(|&i| is_eq[i]).collect();
    let dir = null_space_project(&a.select_rows(&eq), &sub(z, anchor))?;
    let mut tau = 1.0f64;
    for i in (0..a.rows()).filter(|&i| !is_eq[i]) {
        let ad = dot(a.row(i), &dir);
        if ad > 0.0 {
            let slack = (b[i] - dot(a.row(i), anchor)).max(0.0);
            tau = tau.min(slack / ad);
        }
    }
    let mut y = anchor.to_vec();
    axpy(tau, &dir, &mut y);
    Ok(y)
}

/// Finds a feasible point by projecting `(z, −T)` onto the lifted set
/// `{(y, t) : a_i y − s_i t ≤ b_i, |a_j y − b_j| ≤ s_j t, t ≥ 0}`,
/// which starts feasible at `(z, t₀)`. Once `t` reaches zero, `y` is feasible.
fn elastic_start(poly: &Polyhedron, is_eq: &[bool], z: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
    let n = poly.dim();
    let a = poly.a();
    let b = poly.b();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut t0 = 0.0f64;
    for i in 0..poly.n_constraints() {
        let ai = a.row(i);
        let s = match norm(ai) {
            0.0 => 1.0,
            v => v,
        };
        let r = dot(ai, z) - b[i];
        let mut push = |sign: f64| {
            let mut row: Vec<f64> = ai.iter().map(|v| sign * v).collect();
            row.push(-s);
            rows.push(row);
            rhs.push(sign * b[i]);
        };
        push(1.0);
        t0 = t0.max(r / s);
        if is_eq[i] {
            push(-1.0);
            t0 = t0.max(-r / s);
        }
    }
    let mut bound = vec![0.0; n + 1];
    bound[n] = -1.0;
    rows.push(bound);
    rhs.push(0.0);
    let lifted = DenseMatrix::from_rows(&rows, n + 1)?;
    let no_eq = vec![false; rows.len()];

    let scale = 1.0 + norm_inf(z) + norm_inf(b);
    let mut penalty = 1e3 * scale;
    let mut current: Vec<f64> = z.iter().copied().chain([t0 * (1.0 + 1e-12)]).collect();
    let cap = 50 * (rows.len() + 1);
    let mut t_last = t0;
    for _ in 0..4 {
        let target: Vec<f64> = z.iter().copied().chain([-penalty]).collect();
        let sol = solve_least_distance(&lifted, &rhs, &no_eq, &target, current, cap)?;
        current = sol.point;
        t_last = current[n];
        let y = current[..n].to_vec();
        let r = poly.residual(&y)?;
        let ok = r.iter().enumerate().all(|(i, &ri)| {
            if is_eq[i] {
                ri.abs() <= poly.row_act_tol(i, tol.act)
            } else {
                ri <= tol.feas
            }
        });
        if ok {
            return Ok(y);
        }
        penalty *= 1e3;
    }
    Err(PasaError::Infeasible {
        violation: t_last.max(0.0),
    })
}

struct LeastDistance {
    point: Vec<f64>,
    working: Vec<usize>,
    working_multipliers: Vec<f64>,
    iterations: usize,
}

/// Primal active-set solve of `min ½‖y − z‖²` over `{a_i y ≤ b_i}` with the
/// `is_eq` rows kept in the working set. `start` must be feasible (up to
/// rounding) and satisfy the equality rows.
fn solve_least_distance(
    a: &DenseMatrix,
    b: &[f64],
    is_eq: &[bool],
    z: &[f64],
    start: Vec<f64>,
    cap: usize,
) -> Result<LeastDistance> {
    let m = a.rows();
    let mut y = start;
    let mut working: Vec<usize> = (0..m).filter(|&i| is_eq[i]).collect();
    let mut in_working = is_eq.to_vec();
    let mut changes = 0usize;

    loop {
        let aw = a.select_rows(&working);
        let p = null_space_project(&aw, &sub(z, &y))?;
        let pn = norm(&p);
        let scale = 1.0 + norm_inf(z) + norm_inf(&y);

        if pn > 1e-14 * scale {
            let mut block: Option<(usize, f64)> = None;
            for i in (0..m).filter(|&i| !in_working[i]) {
                let ai = a.row(i);
                let ap = dot(ai, &p);
                if ap <= 1e-14 * norm(ai) * pn {
                    continue;
                }
                let slack = (b[i] - dot(ai, &y)).max(0.0);
                let t = slack / ap;
                if t > 1.0 {
                    continue;
                }
                match block {
                    // Relative in the step: ‖p‖ can be huge in the lifted
                    // problem, so an absolute tie would overshoot rows.
                    Some((_, bt)) if t >= bt * (1.0 - TIE_TOL) => {}
                    _ => block = Some((i, t)),
                }
            }
            let tau = block.map_or(1.0, |(_, t)| t);
            axpy(tau, &p, &mut y);
            if let Some((i, _)) = block {
                let pos = working.binary_search(&i).unwrap_err();
                working.insert(pos, i);
                in_working[i] = true;
                changes += 1;
                if changes > cap {
                    return Err(PasaError::NonConvergence { iterations: changes });
                }
                continue;
            }
        }

        let zy = sub(z, &y);
        let lam = if working.is_empty() {
            Vec::new()
        } else {
            least_squares_min_norm(&a.select_rows(&working).transpose(), &zy)?
        };
        let drop_tol = NEG_CLAMP * (1.0 + norm_inf(&zy));
        let mut drop: Option<(usize, f64)> = None;
        for (k, (&i, &l)) in working.iter().zip(&lam).enumerate() {
            if is_eq[i] || l >= -drop_tol {
                continue;
            }
            match drop {
                Some((_, dl)) if l >= dl - TIE_TOL * dl.abs().max(1.0) => {}
                _ => drop = Some((k, l)),
            }
        }
        match drop {
            Some((k, _)) => {
                let i = working.remove(k);
                in_working[i] = false;
                changes += 1;
                if changes > cap {
                    return Err(PasaError::NonConvergence { iterations: changes });
                }
            }
            None => {
                return Ok(LeastDistance {
                    point: y,
                    working,
                    working_multipliers: lam,
                    iterations: changes,
                })
            }
        }
    }
}
