//! The feasible set `{x : Ax ≤ b}`, constraint classification, and faces.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, PasaError, Result};
use crate::linalg::{dot, DenseMatrix};

/// Ascending, duplicate-free list of constraint rows (0-based).
pub type IndexSet = Vec<usize>;

/// Default relative activity tolerance: row `i` is active when `(Ax − b)_i ≥ −ACT_TOL (1 + |b_i|)`.
pub const ACT_TOL: f64 = 1e-10;
/// Default feasibility tolerance on `max_i (Ax − b)_i`.
pub const FEAS_TOL: f64 = 1e-9;

/// Activity and feasibility tolerances used for classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative activity tolerance, scaled per row by `1 + |b_i|`.
    pub act: f64,
    /// Absolute feasibility tolerance.
    pub feas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            act: ACT_TOL,
            feas: FEAS_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    a: DenseMatrix,
    b: Vec<f64>,
}

impl Polyhedron {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        check_len("Polyhedron::new (b)", a.rows(), b.len())?;
        if b.iter().any(|v| !v.is_finite()) {
            return Err(PasaError::InvalidInput("b must be finite".into()));
        }
        Ok(Self { a, b })
    }

    /// `Ω = ℝⁿ`.
    pub fn unconstrained(n: usize) -> Self {
        Self {
            a: DenseMatrix::zeros(0, n),
            b: Vec::new(),
        }
    }

    /// `lo ≤ x ≤ hi`, encoded as upper rows first, then lower rows.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_len("Polyhedron::boxed", lo.len(), hi.len())?;
        let n = lo.len();
        let mut a = DenseMatrix::zeros(2 * n, n);
        let mut b = Vec::with_capacity(2 * n);
        for i in 0..n {
            a.set(i, i, 1.0);
            b.push(hi[i]);
        }
        for i in 0..n {
            a.set(n + i, i, -1.0);
            b.push(-lo[i]);
        }
        Self::new(a, b)
    }

    #[inline]
    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    #[inline]
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Number of variables.
    #[inline]
    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// Number of constraints.
    #[inline]
    pub fn n_constraints(&self) -> usize {
        self.a.rows()
    }

    /// `Ax − b`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("Polyhedron::residual", self.dim(), x.len())?;
        Ok((0..self.n_constraints())
            .map(|i| dot(self.a.row(i), x) - self.b[i])
            .collect())
    }

    /// Per-row activity threshold for a relative tolerance.
    #[inline]
    pub fn row_act_tol(&self, i: usize, act_tol: f64) -> f64 {
        act_tol * (1.0 + self.b[i].abs())
    }

    /// Rows with `(Ax − b)_i ≥ −act_tol (1 + |b_i|)`.
    pub fn active_set(&self, x: &[f64], act_tol: f64) -> Result<IndexSet> {
        let r = self.residual(x)?;
        Ok(self.classify(&r, act_tol).0)
    }

    /// Complement of [`Polyhedron::active_set`].
    pub fn free_set(&self, x: &[f64], act_tol: f64) -> Result<IndexSet> {
        let r = self.residual(x)?;
        Ok(self.classify(&r, act_tol).1)
    }

    pub(crate) fn classify(&self, residual: &[f64], act_tol: f64) -> (IndexSet, IndexSet) {
        (0..residual.len()).partition(|&i| residual[i] >= -self.row_act_tol(i, act_tol))
    }

    pub fn is_feasible(&self, x: &[f64], feas_tol: f64) -> Result<bool> {
        Ok(self.max_violation(x)? <= feas_tol)
    }

    /// `max(0, max_i (Ax − b)_i)`.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        Ok(self.residual(x)?.into_iter().fold(0.0, f64::max))
    }
}

/// The subset of a polyhedron where `equality_rows` hold with equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    base: Polyhedron,
    equality_rows: IndexSet,
}

impl Face {
    #[inline]
    pub fn base(&self) -> &Polyhedron {
        &self.base
    }

    #[inline]
    pub fn equality_rows(&self) -> &[usize] {
        &self.equality_rows
    }

    pub fn is_equality(&self, i: usize) -> bool {
        self.equality_rows.binary_search(&i).is_ok()
    }

    /// Membership: equality rows within `act_tol`, other rows within `feas_tol`.
    pub fn contains(&self, x: &[f64], act_tol: f64, feas_tol: f64) -> Result<bool> {
        let r = self.base.residual(x)?;
        Ok(r.iter().enumerate().all(|(i, &ri)| {
            if self.is_equality(i) {
                ri.abs() <= self.base.row_act_tol(i, act_tol)
            } else {
                ri <= feas_tol
            }
        }))
    }

    /// Adds rows to the equality set, keeping it sorted and duplicate-free.
    pub fn extend_equalities(&mut self, rows: &[usize]) -> Result<()> {
        for &i in rows {
            if i >= self.base.n_constraints() {
                return Err(PasaError::InvalidInput(format!("row {i} out of range")));
            }
            if let Err(pos) = self.equality_rows.binary_search(&i) {
                self.equality_rows.insert(pos, i);
            }
        }
        Ok(())
    }
}

pub fn make_face(poly: &Polyhedron, active: &[usize]) -> Result<Face> {
    let m = poly.n_constraints();
    if let Some(&bad) = active.iter().find(|&&i| i >= m) {
        return Err(PasaError::InvalidInput(format!(
            "row {bad} out of range for {m} constraints"
        )));
    }
    let mut rows = active.to_vec();
    rows.sort_unstable();
    rows.dedup();
    Ok(Face {
        base: poly.clone(),
        equality_rows: rows,
    })
}
