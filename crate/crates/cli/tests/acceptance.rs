//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! Run with `cargo test -p pasa-cli --test acceptance -- --nocapture` to see
//! the summary.

use std::io::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use pasa_cli::{parse_problem, run_cli, trace_rows, TraceRow};
use pasa_core::linalg::{dot, norm, sub};
use pasa_core::measures::{direction, step_point};
use pasa_core::phase_one::gpa_step;
use pasa_core::projection::{null_gradient, project_face};
use pasa_core::{
    brute_force_project, degenerate_qp_suite, global_error, make_face, project, solve, Branch, DenseMatrix, FaceSolver,
    KnownSolution, Objective, PasaError, PasaParams, Phase, Polyhedron, QuadraticObjective, Rosenbrock, SolveResult,
    Status, TestProblem, Tolerances,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- generators

struct Instance {
    poly: Polyhedron,
    interior: Vec<f64>,
}

/// `n ≤ 4`, `m ≤ 8`, entries in [−2, 2], feasible by construction:
/// `b = A x_feas + slack` with some zero slacks and an occasional
/// duplicated row.
fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=8);
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect())
        .collect();
    if m >= 2 && rng.gen_bool(0.1) {
        rows[m - 1] = rows[0].clone();
    }
    let x_feas: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let b: Vec<f64> = rows
        .iter()
        .map(|r| {
            let slack = if rng.gen_bool(0.25) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            };
            dot(r, &x_feas) + slack
        })
        .collect();
    let poly = Polyhedron::new(DenseMatrix::from_rows(&rows, n).unwrap(), b).unwrap();
    Instance { poly, interior: x_feas }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..=r)).collect()
}

/// `Q = MᵀM (+ I)`, `c` uniform in [−2, 2].
fn random_quadratic(rng: &mut ChaCha8Rng, n: usize, strongly_convex: bool) -> QuadraticObjective {
    let m: Vec<Vec<f64>> = (0..n).map(|_| random_vec(rng, n, 1.0)).collect();
    let mut q = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum();
            if strongly_convex && i == j {
                v += 1.0;
            }
            q.set(i, j, v);
        }
    }
    QuadraticObjective::new(q, random_vec(rng, n, 2.0)).unwrap()
}

/// `‖Q‖₂` of a symmetric matrix by cyclic Jacobi rotations.
fn spectral_radius(q: &DenseMatrix) -> f64 {
    let n = q.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| q.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                if a[p][r] == 0.0 {
                    continue;
                }
                let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akr) = (a[k][p], a[k][r]);
                    a[k][p] = c * akp - s * akr;
                    a[k][r] = s * akp + c * akr;
                }
                for k in 0..n {
                    let (apk, ark) = (a[p][k], a[r][k]);
                    a[p][k] = c * apk - s * ark;
                    a[r][k] = s * apk + c * ark;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max)
}

fn feasible_point(rng: &mut ChaCha8Rng, inst: &Instance) -> Vec<f64> {
    let n = inst.poly.dim();
    if rng.gen_bool(0.3) {
        return inst.interior.clone();
    }
    project(&inst.poly, &random_vec(rng, n, 3.0)).unwrap().point
}

/// Independent KKT check of `y = P(z)` with multipliers `lam`.
fn projection_kkt(poly: &Polyhedron, z: &[f64], y: &[f64], lam: &[f64]) -> f64 {
    let a = poly.a();
    let mut stat = sub(y, z);
    for (i, &l) in lam.iter().enumerate() {
        for (s, aij) in stat.iter_mut().zip(a.row(i)) {
            *s += l * aij;
        }
    }
    let stat = stat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = stat;
    for (i, &l) in lam.iter().enumerate() {
        let r = dot(a.row(i), y) - poly.b()[i];
        worst = worst.max(r).max(-l).max((l * r).abs());
    }
    worst
}

const TOL: Tolerances = Tolerances { act: 1e-10, feas: 1e-9 };

// ---------------------------------------------------------------- criteria

fn projection_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut worst_point, mut worst_kkt) = (0.0f64, 0.0f64);
    for case in 0..500 {
        let inst = random_instance(&mut rng);
        let z = random_vec(&mut rng, inst.poly.dim(), 3.0);
        let fast = project(&inst.poly, &z).map_err(|e| format!("case {case}: {e}"))?;
        let oracle = brute_force_project(&inst.poly, &z).map_err(|e| format!("case {case}: {e}"))?;
        let gap = norm(&sub(&fast.point, &oracle.point));
        let kkt = projection_kkt(&inst.poly, &z, &fast.point, &fast.multipliers);
        worst_point = worst_point.max(gap);
        worst_kkt = worst_kkt.max(kkt).max(fast.kkt_residual);
        ensure(gap <= 1e-6, || format!("case {case}: point gap {gap:e}"))?;
        ensure(kkt <= 1e-8 && fast.kkt_residual <= 1e-8, || {
            format!("case {case}: KKT residual {kkt:e} / reported {:e}", fast.kkt_residual)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "500 cases, max point gap {worst_point:.1e}, max KKT {worst_kkt:.1e}, {elapsed:.2?}"
    ))
}

fn lipschitz_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    for pair in 0..1000 {
        let inst = random_instance(&mut rng);
        let f = random_quadratic(&mut rng, inst.poly.dim(), false);
        let kappa = spectral_radius(f.q());
        let x1 = feasible_point(&mut rng, &inst);
        let x2 = feasible_point(&mut rng, &inst);
        let dx = norm(&sub(&x1, &x2));
        for alpha in [0.1, 1.0, 10.0] {
            let y1 = step_point(&f, &inst.poly, &x1, alpha, &TOL)
                .map_err(|e| e.to_string())?
                .point;
            let y2 = step_point(&f, &inst.poly, &x2, alpha, &TOL)
                .map_err(|e| e.to_string())?
                .point;
            let dy = norm(&sub(&y1, &y2));
            let dd = norm(&sub(&sub(&y1, &x1), &sub(&y2, &x2)));
            let slack_y = dy - (1.0 + alpha * kappa) * dx;
            let slack_d = dd - (2.0 + alpha * kappa) * dx;
            worst = worst.max(slack_y).max(slack_d);
            ensure(slack_y <= 1e-8, || {
                format!("pair {pair}, alpha {alpha}: y excess {slack_y:e}")
            })?;
            ensure(slack_d <= 1e-8, || {
                format!("pair {pair}, alpha {alpha}: d excess {slack_d:e}")
            })?;
        }
    }
    Ok(format!("1000 pairs x 3 step sizes, max excess {worst:.1e}"))
}

fn face_gradient_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < 200 {
        let inst = random_instance(&mut rng);
        let n = inst.poly.dim();
        let x = project(&inst.poly, &random_vec(&mut rng, n, 4.0)).unwrap().point;
        let active = inst.poly.active_set(&x, TOL.act).unwrap();
        if active.is_empty() {
            continue;
        }
        let face = make_face(&inst.poly, &active).map_err(|e| e.to_string())?;
        let f = random_quadratic(&mut rng, n, false);
        let alpha = rng.gen_range(0.05..5.0);
        let g = f.gradient(&x);
        let ga = null_gradient(&inst.poly, &active, &g).map_err(|e| e.to_string())?;
        let full: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        let reduced: Vec<f64> = x.iter().zip(&ga).map(|(a, b)| a - alpha * b).collect();
        let p1 = project_face(&face, &full).map_err(|e| e.to_string())?.point;
        let p2 = project_face(&face, &reduced).map_err(|e| e.to_string())?.point;
        let gap = norm(&sub(&p1, &p2));
        worst = worst.max(gap);
        ensure(gap <= 1e-8, || format!("case {cases}: gap {gap:e}"))?;
        cases += 1;
    }
    Ok(format!("200 cases, max gap {worst:.1e}"))
}

fn descent_and_scale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_g1, mut worst_g2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for case in 0..300 {
        let inst = random_instance(&mut rng);
        let f = random_quadratic(&mut rng, inst.poly.dim(), false);
        let x = feasible_point(&mut rng, &inst);
        let g = f.gradient(&x);
        let d1 = direction(&f, &inst.poly, &x, 1.0, &TOL).map_err(|e| e.to_string())?;
        for alpha in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let d = direction(&f, &inst.poly, &x, alpha, &TOL).map_err(|e| e.to_string())?;
            let g1 = dot(&g, &d) + dot(&d, &d) / alpha;
            let g2 = alpha.min(1.0) * norm(&d1) - norm(&d);
            worst_g1 = worst_g1.max(g1);
            worst_g2 = worst_g2.max(g2);
            ensure(g1 <= 1e-10, || {
                format!("case {case}, alpha {alpha}: descent excess {g1:e}")
            })?;
            ensure(g2 <= 1e-10, || {
                format!("case {case}, alpha {alpha}: scale excess {g2:e}")
            })?;
        }
    }
    Ok(format!(
        "300 points x 5 step sizes, max excess {worst_g1:.1e} / {worst_g2:.1e}"
    ))
}

fn gpa_step_floor() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = PasaParams::default();
    let (mut steps, mut smallest_margin) = (0usize, f64::INFINITY);
    for run in 0..100 {
        let inst = random_instance(&mut rng);
        let f = random_quadratic(&mut rng, inst.poly.dim(), true);
        let kappa = spectral_radius(f.q());
        let floor = 1.0f64.min(2.0 * params.eta * (1.0 - params.delta) / (kappa * params.alpha));
        let mut x = feasible_point(&mut rng, &inst);
        for _ in 0..30 {
            // Below the solver's stopping tolerance the projected direction
            // is no longer a descent direction in floating point.
            if global_error(&f, &inst.poly, &x, &TOL).map_err(|e| e.to_string())? <= params.eps {
                break;
            }
            match gpa_step(&f, &inst.poly, &x, &params) {
                Ok(s) => {
                    smallest_margin = smallest_margin.min(s.step - floor);
                    ensure(s.step >= floor - 1e-12, || {
                        format!("run {run}: step {} below floor {floor}", s.step)
                    })?;
                    steps += 1;
                    x = s.x_next;
                }
                Err(PasaError::ZeroDirection) => break,
                Err(e) => return Err(format!("run {run}: {e}")),
            }
        }
    }
    Ok(format!(
        "{steps} accepted steps, min margin above floor {smallest_margin:.2e}"
    ))
}

fn box_rosenbrock() -> (Polyhedron, Rosenbrock) {
    (
        Polyhedron::boxed(&[-2.0, -2.0], &[2.0, 2.0]).unwrap(),
        Rosenbrock::new(2).unwrap(),
    )
}

fn rosenbrock_convergence() -> Outcome {
    let (poly, f) = box_rosenbrock();
    let start = Instant::now();
    let params = PasaParams {
        eps: 1e-6,
        max_iter: 10_000,
        ..PasaParams::default()
    };
    let r = solve(&f, &poly, &[-1.2, 1.0], &params).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(r.status == Status::Converged, || format!("status {:?}", r.status))?;
    ensure(r.global_error <= 1e-6, || format!("E = {:e}", r.global_error))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;

    let budgets = [1usize, 2, 4, 8, 16, 32, 64, 128];
    let mut mins = Vec::new();
    for &n in &budgets {
        let p = PasaParams {
            eps: 0.0,
            max_iter: n,
            ..PasaParams::default()
        };
        let run = solve(&f, &poly, &[-1.2, 1.0], &p).map_err(|e| e.to_string())?;
        mins.push(run.trace.iter().map(|t| t.global_error).fold(f64::INFINITY, f64::min));
    }
    ensure(
        mins.windows(2).all(|w| w[1] <= w[0]) && mins[mins.len() - 1] <= 1e-6 * mins[0],
        || format!("min E over budgets {budgets:?} not driven down: {mins:?}"),
    )?;
    Ok(format!(
        "{} iterations, E = {:.1e}, {elapsed:.2?}; min E over budgets {budgets:?}: {:.1e} -> {:.1e}",
        r.stats.iterations,
        r.global_error,
        mins[0],
        mins[mins.len() - 1]
    ))
}

fn last_one_to_two(r: &SolveResult) -> Option<usize> {
    r.trace.iter().rposition(|t| t.branch == Branch::OneToTwo)
}

fn suite_problem(name: &str) -> TestProblem {
    degenerate_qp_suite()
        .into_iter()
        .find(|p| p.name == name)
        .expect("suite instance")
}

fn random_box_start(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0.0..=1.0)).collect()
}

fn nondegenerate_phase_two_only() -> Outcome {
    let prob = suite_problem("nondegenerate-box");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tail_rows = 0;
    for run in 0..20 {
        let x0 = random_box_start(&mut rng, 2);
        let r = solve(&prob.objective, &prob.poly, &x0, &PasaParams::default()).map_err(|e| e.to_string())?;
        ensure(r.status == Status::Converged, || format!("run {run}: {:?}", r.status))?;
        let Some(k) = last_one_to_two(&r) else {
            return Err(format!("run {run}: never branched to phase two"));
        };
        for t in &r.trace[k..] {
            ensure(t.phase == Phase::Two, || {
                format!("run {run}: phase one at iterate {}", t.iter)
            })?;
            ensure(t.global_error <= t.local_error + 1e-8, || {
                format!(
                    "run {run}, iterate {}: E {:e} > e {:e}",
                    t.iter, t.global_error, t.local_error
                )
            })?;
        }
        tail_rows += r.trace.len() - k;
    }
    Ok(format!(
        "20 starts, {tail_rows} iterates after the final branch, all phase two"
    ))
}

fn degenerate_phase_two_only() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut max_decays, mut runs, mut tail_steps) = (0, 0, 0);
    let solvers = [FaceSolver::QuasiNewton, FaceSolver::ProjectedGradient];
    let problems = [
        suite_problem("degenerate-box"),
        suite_problem("degenerate-r3"),
        ill_conditioned_degenerate_qp(),
    ];
    for (prob, face_solver) in problems.iter().flat_map(|p| solvers.map(|s| (p, s))) {
        let (name, n) = (prob.name, prob.poly.dim());
        let params = PasaParams {
            face_solver,
            ..PasaParams::default()
        };
        for run in 0..20 {
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..=1.5)).collect();
            let r = solve(&prob.objective, &prob.poly, &x0, &params).map_err(|e| e.to_string())?;
            ensure(r.status == Status::Converged, || {
                format!("{name} ({face_solver:?}) run {run}: {:?}", r.status)
            })?;
            ensure(r.stats.theta_decays < 60, || {
                format!(
                    "{name} ({face_solver:?}) run {run}: {} theta decays",
                    r.stats.theta_decays
                )
            })?;
            max_decays = max_decays.max(r.stats.theta_decays);
            if let Some(first_small) = r.trace.iter().position(|t| t.global_error < 1e-3) {
                for t in &r.trace[first_small..] {
                    ensure(t.n_undecided == 0, || {
                        format!(
                            "{name} ({face_solver:?}) run {run}: undecided rows at iterate {}",
                            t.iter
                        )
                    })?;
                }
            }
            // The last row only records termination and takes no step.
            let stepping = &r.trace[..r.trace.len() - 1];
            for t in stepping.iter().filter(|t| t.global_error < 1e-3) {
                ensure(t.phase == Phase::Two, || {
                    format!(
                        "{name} ({face_solver:?}) run {run}: phase one step at iterate {} with E {:e}",
                        t.iter, t.global_error
                    )
                })?;
                tail_steps += 1;
            }
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} runs, at most {max_decays} theta decays, {tail_steps} steps with E < 1e-3, all phase two"
    ))
}

fn finite_identification() -> Outcome {
    let prob = suite_problem("nondegenerate-box");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0;
    for run in 0..20 {
        let x0: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..=3.0)).collect();
        let r = solve(&prob.objective, &prob.poly, &x0, &PasaParams::default()).map_err(|e| e.to_string())?;
        let hit = r
            .trace
            .iter()
            .position(|t| norm(&sub(&t.x, &prob.solution.x_star)) <= 1e-12)
            .ok_or_else(|| format!("run {run}: never landed on x*"))?;
        ensure(hit <= 50, || format!("run {run}: landed at iterate {hit}"))?;
        worst = worst.max(hit);
    }
    Ok(format!("20 starts, exact landing by iterate {worst} (limit 50)"))
}

/// QP on [−1, 1]³ with Hessian `q` and minimizer `x_star`; `c` is chosen so
/// that `multipliers` certify optimality.
fn certified_box_qp(name: &'static str, q: &[Vec<f64>], x_star: Vec<f64>, multipliers: Vec<f64>) -> TestProblem {
    let poly = Polyhedron::boxed(&[-1.0; 3], &[1.0; 3]).unwrap();
    let q = DenseMatrix::from_rows(q, 3).unwrap();
    let qx = q.mul_vec(&x_star).unwrap();
    let at_l = poly.a().tr_mul_vec(&multipliers).unwrap();
    let c: Vec<f64> = qx.iter().zip(&at_l).map(|(a, b)| -(a + b)).collect();
    let active = poly.active_set(&x_star, 1e-12).unwrap();
    let active_plus: Vec<usize> = active.iter().copied().filter(|&i| multipliers[i] > 0.0).collect();
    let pi = active.iter().map(|&i| multipliers[i]).fold(f64::INFINITY, f64::min);
    TestProblem {
        name,
        objective: QuadraticObjective::new(q, c).unwrap(),
        poly,
        solution: KnownSolution {
            x_star,
            degenerate: active_plus.len() < active.len(),
            active_plus,
            multipliers,
            sigma: None,
            pi: Some(pi),
        },
    }
}

/// `x* = (1, 0.2, −0.3)` with only row 0 active, multiplier 0.7.
fn conditioned_known_qp() -> TestProblem {
    let q = [vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.8], vec![0.5, 0.8, 20.0]];
    certified_box_qp(
        "conditioned",
        &q,
        vec![1.0, 0.2, -0.3],
        vec![0.7, 0.0, 0.0, 0.0, 0.0, 0.0],
    )
}

/// `x* = (1, 1, 0.1)` with rows 0 and 1 active; row 0 has a zero multiplier.
/// The Hessian has condition number near 100, so face iterations converge
/// gradually instead of landing in a step or two.
fn ill_conditioned_degenerate_qp() -> TestProblem {
    let q = [vec![1.0, 0.5, 0.0], vec![0.5, 10.0, 2.0], vec![0.0, 2.0, 100.0]];
    certified_box_qp(
        "ill-conditioned-degenerate",
        &q,
        vec![1.0, 1.0, 0.1],
        vec![0.0, 1.5, 0.0, 0.0, 0.0, 0.0],
    )
}

fn anchor_ratio_stabilizes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut problems = degenerate_qp_suite();
    problems.push(conditioned_known_qp());
    problems.push(ill_conditioned_degenerate_qp());
    let (mut runs, mut with_ratios, mut largest) = (0, 0, 0.0f64);
    for prob in &problems {
        let n = prob.poly.dim();
        for run in 0..10 {
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let r = solve(&prob.objective, &prob.poly, &x0, &PasaParams::default()).map_err(|e| e.to_string())?;
            ensure(r.status == Status::Converged, || {
                format!("{} run {run}: {:?}", prob.name, r.status)
            })?;
            let d = pasa_core::lemma_ratios(&r.trace, &prob.solution, &prob.objective, &prob.poly, &TOL)
                .map_err(|e| e.to_string())?;
            ensure(pasa_core::stabilizes(&d.gap_ratio_running_max), || {
                format!("{} run {run}: running max {:?}", prob.name, d.gap_ratio_running_max)
            })?;
            if d.iterates.iter().any(|it| it.gap_ratio.is_some()) {
                with_ratios += 1;
            }
            largest = largest.max(*d.gap_ratio_running_max.last().unwrap_or(&0.0));
            runs += 1;
        }
    }
    ensure(with_ratios > 0, || "no run produced a defined ratio".into())?;
    Ok(format!(
        "{runs} runs ({with_ratios} with defined ratios), all stabilize; largest running max {largest:.2e}"
    ))
}

fn multiplier_scaling() -> Outcome {
    let mut problems = degenerate_qp_suite();
    problems.push(conditioned_known_qp());
    problems.push(ill_conditioned_degenerate_qp());
    let mut worst = 0.0f64;
    for prob in &problems {
        let x = &prob.solution.x_star;
        let base = step_point(&prob.objective, &prob.poly, x, 1.0, &TOL).map_err(|e| e.to_string())?;
        for alpha in [0.5, 2.0, 10.0] {
            let scaled = step_point(&prob.objective, &prob.poly, x, alpha, &TOL).map_err(|e| e.to_string())?;
            for (i, (&s, &b)) in scaled.multipliers.iter().zip(&base.multipliers).enumerate() {
                let gap = (s - alpha * b).abs();
                worst = worst.max(gap);
                ensure(gap <= 1e-8, || {
                    format!("{}: row {i}, alpha {alpha}: {s} vs {}", prob.name, alpha * b)
                })?;
            }
        }
        ensure(
            base.multipliers
                .iter()
                .zip(&prob.solution.multipliers)
                .all(|(a, b)| (a - b).abs() <= 1e-8),
            || {
                format!(
                    "{}: multipliers {:?} differ from certificate",
                    prob.name, base.multipliers
                )
            },
        )?;
    }
    Ok(format!(
        "{} solutions x 3 scalings, max gap {worst:.1e}",
        problems.len()
    ))
}

fn cli_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn cli(args: &[String]) -> (i32, String) {
    let mut argv = vec!["pasa".to_string()];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn cli_contract() -> Outcome {
    let problem = |name: &str| cli_dir().join("problems").join(name).to_string_lossy().into_owned();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let goldens: Vec<(Vec<String>, &str, i32)> = vec![
        (
            s(&["solve", "--problem", &problem("boxqp.txt"), "--eps", "1e-8"]),
            "solve_boxqp.txt",
            0,
        ),
        (
            s(&["solve", "--problem", &problem("boxqp.txt"), "--json"]),
            "solve_boxqp.json",
            0,
        ),
        (
            s(&["solve", "--problem", &problem("degenerate.txt")]),
            "solve_degenerate.txt",
            0,
        ),
        (
            s(&["solve", "--problem", &problem("box-rosenbrock.txt"), "--eps", "1e-6"]),
            "solve_box_rosenbrock.txt",
            0,
        ),
        (
            s(&["project", "--problem", &problem("halfplane.txt"), "--point", "1 1"]),
            "project_halfplane.txt",
            0,
        ),
        (
            s(&["check", "--problem", &problem("boxqp.txt"), "--point", "0 0"]),
            "check_boxqp.txt",
            0,
        ),
    ];
    for (args, golden, code) in &goldens {
        let (got, out) = cli(args);
        ensure(got == *code, || format!("{golden}: exit {got}, expected {code}"))?;
        let expected =
            std::fs::read_to_string(cli_dir().join("tests/golden").join(golden)).map_err(|e| e.to_string())?;
        ensure(out == expected, || format!("{golden}: output differs"))?;
    }
    let (code, _) = cli(&s(&[
        "solve",
        "--problem",
        &problem("rosenbrock.txt"),
        "--max-iter",
        "3",
    ]));
    ensure(code == 1, || format!("max_iter exit {code}"))?;
    let (code, _) = cli(&s(&["solve", "--problem", "/nonexistent/problem.txt"]));
    ensure(code == 3, || format!("input error exit {code}"))?;

    let dir = std::env::temp_dir().join(format!("pasa-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let infeasible = dir.join("empty.txt");
    std::fs::write(
        &infeasible,
        "pasa-problem v1\nn 1\nm 2\nA\n1\n-1\nb\n0 -1\nobjective quadratic\nQ\n1\nc\n0\nx0\n0\n",
    )
    .map_err(|e| e.to_string())?;
    let (code, _) = cli(&s(&["solve", "--problem", &infeasible.to_string_lossy()]));
    ensure(code == 2, || format!("infeasible exit {code}"))?;
    let steep = dir.join("steep.txt");
    std::fs::write(
        &steep,
        "pasa-problem v1\nn 1\nm 0\nobjective quadratic\nQ\n100\nc\n0\nx0\n1\n",
    )
    .map_err(|e| e.to_string())?;
    let (code, _) = cli(&s(&[
        "solve",
        "--problem",
        &steep.to_string_lossy(),
        "--backtrack-cap",
        "0",
    ]));
    ensure(code == 4, || format!("line-search failure exit {code}"))?;

    let trace_path = dir.join("trace.csv");
    let (code, _) = cli(&s(&[
        "solve",
        "--problem",
        &problem("box-rosenbrock.txt"),
        "--trace",
        &trace_path.to_string_lossy(),
    ]));
    ensure(code == 0, || format!("trace run exit {code}"))?;
    let parsed: Vec<TraceRow> = csv::Reader::from_path(&trace_path)
        .map_err(|e| e.to_string())?
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let file =
        parse_problem(&std::fs::read_to_string(problem("box-rosenbrock.txt")).unwrap()).map_err(|e| e.to_string())?;
    let r = solve(&file.objective, &file.poly, &file.x0, &PasaParams::default()).map_err(|e| e.to_string())?;
    ensure(parsed == trace_rows(&r.trace), || {
        "trace CSV differs from in-memory trace".into()
    })?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!(
        "{} golden outputs, exit codes 0-4, trace CSV round-trips ({} rows)",
        goldens.len(),
        parsed.len()
    ))
}

#[test]
fn acceptance_suite() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("projection matches brute force", projection_correctness),
        ("nonexpansive step point and direction", lipschitz_bounds),
        (
            "face projection ignores the normal gradient part",
            face_gradient_identity,
        ),
        ("descent and scale inequalities", descent_and_scale),
        ("gradient projection step floor", gpa_step_floor),
        ("global convergence on boxed Rosenbrock", rosenbrock_convergence),
        ("phase two only, nondegenerate", nondegenerate_phase_two_only),
        ("phase two only, degenerate", degenerate_phase_two_only),
        ("finite identification", finite_identification),
        ("anchor gap ratio stabilizes", anchor_ratio_stabilizes),
        ("multiplier scaling", multiplier_scaling),
        ("command-line contract", cli_contract),
    ];
    let mut failures = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        // Written to the raw handle so the report shows even when output is captured.
        let line = match outcome {
            Ok(detail) => format!("[PASS] {:>2}. {name}: {detail}", k + 1),
            Err(detail) => {
                failures.push(k + 1);
                format!("[FAIL] {:>2}. {name}: {detail}", k + 1)
            }
        };
        writeln!(std::io::stderr(), "{line}").unwrap();
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

#[test]
fn global_error_helper_agrees_with_trace() {
    let (poly, f) = box_rosenbrock();
    let r = solve(&f, &poly, &[-1.2, 1.0], &PasaParams::default()).unwrap();
    for t in r.trace.iter().step_by(7) {
        assert_eq!(global_error(&f, &poly, &t.x, &TOL).unwrap(), t.global_error);
    }
}
