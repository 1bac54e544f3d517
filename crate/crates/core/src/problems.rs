//! Objective contract, built-in test objectives and instances with certified
//! solutions, and the subset-enumeration projection oracle.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, PasaError, Result};
use crate::linalg::{least_squares_min_norm, norm, norm_inf, sub, CompensatedSum, DenseMatrix};
use crate::polyhedron::{IndexSet, Polyhedron, Tolerances};
use crate::projection::{kkt_residual, ProjectionResult};

/// A continuously differentiable function with its gradient.
///
/// Implementations must be pure: the same `x` always yields the same value and gradient.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Lipschitz constant of the gradient, when known. Diagnostics only.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        (**self).lipschitz_hint()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        (**self).lipschitz_hint()
    }
}

/// `f(x) = ½ xᵀQx + cᵀx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticObjective {
    q: DenseMatrix,
    c: Vec<f64>,
    lipschitz: f64,
}

impl QuadraticObjective {
    pub fn new(q: DenseMatrix, c: Vec<f64>) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(PasaError::InvalidInput("Q must be square".into()));
        }
        check_len("QuadraticObjective (c)", q.rows(), c.len())?;
        if !q.is_symmetric(1e-12) {
            return Err(PasaError::InvalidInput("Q must be symmetric".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(PasaError::InvalidInput("c must be finite".into()));
        }
        let lipschitz = q.spectral_norm();
        Ok(Self { q, c, lipschitz })
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

pub fn quadratic_objective(q: DenseMatrix, c: Vec<f64>) -> Result<QuadraticObjective> {
    QuadraticObjective::new(q, c)
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.c.len()
    }

    /// Evaluated in double-double so that comparisons between nearby points
    /// follow the exact ordering even when the change is far below `ulp(f)`.
    fn value(&self, x: &[f64]) -> f64 {
        let mut acc = CompensatedSum::default();
        for (i, &xi) in x.iter().enumerate() {
            for (&qij, &xj) in self.q.row(i).iter().zip(x) {
                let p = xi * xj;
                let half = 0.5 * qij;
                acc.add_product(half, p);
                acc.add_product(half, xi.mul_add(xj, -p));
            }
            acc.add_product(self.c[i], xi);
        }
        acc.value()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.mul_vec(x).expect("dimension checked by caller");
        g.iter_mut().zip(&self.c).for_each(|(gi, ci)| *gi += ci);
        g
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// Extended Rosenbrock function `Σ 100(x_{i+1} − x_i²)² + (1 − x_i)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rosenbrock {
    n: usize,
}

impl Rosenbrock {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(PasaError::InvalidInput("rosenbrock needs n >= 2".into()));
        }
        Ok(Self { n })
    }
}

pub fn rosenbrock_objective(n: usize) -> Result<Rosenbrock> {
    Rosenbrock::new(n)
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for i in 0..self.n - 1 {
            let t = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * t;
        }
        g
    }
}

/// Objective built from a pair of closures.
pub struct FnObjective<F, G> {
    dim: usize,
    value: F,
    gradient: G,
    lipschitz: Option<f64>,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dim: usize, value: F, gradient: G) -> Self {
        Self {
            dim,
            value,
            gradient,
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, kappa: f64) -> Self {
        self.lipschitz = Some(kappa);
        self
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// Largest relative discrepancy between the gradient and central differences at `x`.
pub fn gradient_error<O: Objective + ?Sized>(obj: &O, x: &[f64]) -> f64 {
    let g = obj.gradient(x);
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = obj.value(&xp);
        xp[i] = x[i] - h;
        let fm = obj.value(&xp);
        xp[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        let err = (fd - g[i]).abs() / (1.0 + g[i].abs().max(fd.abs()));
        worst = worst.max(err);
    }
    worst
}

/// A stationary point with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownSolution {
    pub x_star: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// Active rows with strictly positive multiplier.
    pub active_plus: IndexSet,
    pub degenerate: bool,
    /// Strong second-order constant on the null space of the `active_plus` rows.
    pub sigma: Option<f64>,
    /// Smallest multiplier on the active rows (nondegeneracy margin).
    pub pi: Option<f64>,
}

/// Instance with a certified solution.
#[derive(Debug, Clone)]
pub struct TestProblem {
    pub name: &'static str,
    pub objective: QuadraticObjective,
    pub poly: Polyhedron,
    pub solution: KnownSolution,
}

/// `max(‖g + Aᵀλ‖∞, max violation, ‖min(λ,0)‖∞, max |λ_i (Ax − b)_i|)` at `(x, λ)`.
pub fn kkt_violation<O: Objective + ?Sized>(obj: &O, poly: &Polyhedron, x: &[f64], lambda: &[f64]) -> Result<f64> {
    check_len("kkt_violation (x)", poly.dim(), x.len())?;
    check_len("kkt_violation (lambda)", poly.n_constraints(), lambda.len())?;
    let mut stat = obj.gradient(x);
    let atl = poly.a().tr_mul_vec(lambda)?;
    stat.iter_mut().zip(&atl).for_each(|(s, a)| *s += a);
    let res = poly.residual(x)?;
    let feas = res.iter().fold(0.0f64, |m, &r| m.max(r));
    let sign = lambda.iter().fold(0.0f64, |m, &l| m.max(-l));
    let comp = lambda.iter().zip(&res).fold(0.0f64, |m, (&l, &r)| m.max((l * r).abs()));
    Ok(norm_inf(&stat).max(feas).max(sign).max(comp))
}

fn known_solution(poly: &Polyhedron, x_star: Vec<f64>, multipliers: Vec<f64>, sigma: f64) -> KnownSolution {
    let active = poly.active_set(&x_star, Tolerances::default().act).expect("sized");
    let active_plus: IndexSet = active.iter().copied().filter(|&i| multipliers[i] > 0.0).collect();
    let degenerate = active_plus.len() < active.len();
    let pi = active.iter().map(|&i| multipliers[i]).fold(f64::INFINITY, f64::min);
    KnownSolution {
        x_star,
        multipliers,
        active_plus,
        degenerate,
        sigma: Some(sigma),
        pi: if pi.is_finite() { Some(pi) } else { None },
    }
}

/// Certified instances: (a) nondegenerate box QP, (b) degenerate box QP,
/// (c) degenerate QP in ℝ³ with independent active rows and a positive definite Hessian.
pub fn degenerate_qp_suite() -> Vec<TestProblem> {
    let box2 = Polyhedron::boxed(&[0.0, 0.0], &[1.0, 1.0]).expect("valid box");

    // (a) f = ½‖x − (2,2)‖²
    let a = QuadraticObjective::new(DenseMatrix::identity(2), vec![-2.0, -2.0]).expect("valid");
    let sol_a = known_solution(&box2, vec![1.0, 1.0], vec![1.0, 1.0, 0.0, 0.0], 1.0);

    // (b) f = ½‖x − (1,2)‖²: row 0 active with zero multiplier.
    let b = QuadraticObjective::new(DenseMatrix::identity(2), vec![-1.0, -2.0]).expect("valid");
    let sol_b = known_solution(&box2, vec![1.0, 1.0], vec![0.0, 1.0, 0.0, 0.0], 1.0);

    // (c) rows x1 ≤ 1, x2 ≤ 1, x1 + x2 + x3 ≤ 3, x ≥ −1; x* = (1,1,1), λ* = (1, 0, 2, 0, 0, 0).
    // c is chosen so that Q x* + c = −Aᵀλ* = (−3, −2, −2).
    let rows = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![1.0, 1.0, 1.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, -1.0],
    ];
    let poly_c = Polyhedron::new(
        DenseMatrix::from_rows(&rows, 3).expect("valid"),
        vec![1.0, 1.0, 3.0, 1.0, 1.0, 1.0],
    )
    .expect("valid");
    let q = DenseMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 2.0, 0.5], vec![0.0, 0.5, 2.0]], 3).expect("valid");
    let c = QuadraticObjective::new(q, vec![-5.5, -5.0, -4.5]).expect("valid");
    // Smallest eigenvalue of the tridiagonal Q is 2 − 0.5·√2.
    let sol_c = known_solution(
        &poly_c,
        vec![1.0, 1.0, 1.0],
        vec![1.0, 0.0, 2.0, 0.0, 0.0, 0.0],
        2.0 - 0.5 * std::f64::consts::SQRT_2,
    );

    vec![
        TestProblem {
            name: "nondegenerate-box",
            objective: a,
            poly: box2.clone(),
            solution: sol_a,
        },
        TestProblem {
            name: "degenerate-box",
            objective: b,
            poly: box2,
            solution: sol_b,
        },
        TestProblem {
            name: "degenerate-r3",
            objective: c,
            poly: poly_c,
            solution: sol_c,
        },
    ]
}

/// Projection by enumerating every subset of rows as a candidate active set.
///
/// Limited to `m ≤ 12`, `n ≤ 6`.
pub fn brute_force_project(poly: &Polyhedron, z: &[f64]) -> Result<ProjectionResult> {
    let (n, m) = (poly.dim(), poly.n_constraints());
    check_len("brute_force_project (z)", n, z.len())?;
    if m > 12 || n > 6 {
        return Err(PasaError::InvalidInput(format!(
            "brute force projection limited to m <= 12, n <= 6 (got m = {m}, n = {n})"
        )));
    }
    let scale = 1.0 + norm_inf(z) + norm_inf(poly.b());
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;

    for mask in 0u32..(1u32 << m) {
        let rows: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let a_s = poly.a().select_rows(&rows);
        let b_s: Vec<f64> = rows.iter().map(|&i| poly.b()[i]).collect();

        let y = if rows.is_empty() {
            z.to_vec()
        } else {
            let r = sub(&a_s.mul_vec(z)?, &b_s);
            let corr = least_squares_min_norm(&a_s, &r)?;
            let y = sub(z, &corr);
            let eq_res = sub(&a_s.mul_vec(&y)?, &b_s);
            if norm_inf(&eq_res) > 1e-9 * scale {
                continue;
            }
            y
        };
        if poly.max_violation(&y)? > 1e-9 {
            continue;
        }

        let zy = sub(z, &y);
        let mut lambda = vec![0.0; m];
        if !rows.is_empty() {
            let lam = least_squares_min_norm(&a_s.transpose(), &zy)?;
            let fit = sub(&a_s.tr_mul_vec(&lam)?, &zy);
            if norm_inf(&fit) > 1e-9 * scale || lam.iter().any(|&l| l < -1e-10 * scale) {
                continue;
            }
            for (&i, &l) in rows.iter().zip(&lam) {
                lambda[i] = l.max(0.0);
            }
        } else if norm(&zy) > 0.0 {
            continue;
        }

        let dist = norm(&zy);
        if best.as_ref().is_none_or(|(d, _, _)| dist < *d - 1e-12 * scale) {
            best = Some((dist, y, lambda));
        }
    }

    let (_, y, lambda) = best.ok_or(PasaError::Infeasible { violation: f64::NAN })?;
    let active = poly.active_set(&y, Tolerances::default().act)?;
    let kkt = kkt_residual(poly, &[], z, &y, &lambda)?;
    Ok(ProjectionResult {
        point: y,
        multipliers: lambda,
        active_at_point: active,
        iterations: 0,
        kkt_residual: kkt,
    })
}
