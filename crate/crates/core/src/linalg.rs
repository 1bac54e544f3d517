//! Small dense linear-algebra kernels.
//!
//! Everything here is sized for the polyhedra the solver works on (tens of
//! rows and columns), so the factorizations form explicit orthogonal factors
//! instead of keeping compact Householder representations.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, PasaError, Result};

/// Pivots smaller than this fraction of the largest pivot are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("DenseMatrix::new", rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PasaError::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows. `cols` is needed when `rows` is empty.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len("DenseMatrix::from_rows", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// Submatrix made of the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// `M v`
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("DenseMatrix::mul_vec", self.cols, v.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `Mᵀ v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("DenseMatrix::tr_mul_vec", self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                axpy(*vi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Spectral norm estimate by power iteration on `MᵀM`.
    pub fn spectral_norm(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        // Deterministic start vector that is unlikely to be orthogonal to the top singular vector.
        let mut v: Vec<f64> = (0..self.cols).map(|j| 1.0 + 0.1 * j as f64).collect();
        let mut sigma = 0.0;
        for _ in 0..500 {
            let nv = norm(&v);
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let mv = self.mul_vec(&v).expect("sized");
            let next = norm(&mv);
            let w = self.tr_mul_vec(&mv).expect("sized");
            let converged = (next - sigma).abs() <= 1e-15 * next.max(1.0);
            sigma = next;
            v = w;
            if converged {
                break;
            }
        }
        sigma
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[inline]
pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// y += a * x
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn scale(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Sum of products carried in double-double precision, so the rounded
/// result is almost always the correctly rounded one.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    hi: f64,
    lo: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bb = s - self.hi;
        self.lo += (self.hi - (s - bb)) + (v - bb);
        self.hi = s;
    }

    /// Adds `a * b` exactly up to the final rounding.
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.lo += a.mul_add(b, -p);
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Householder QR `A P = Q R` with optional column pivoting.
///
/// `q` is the full square orthogonal factor, `r` is upper trapezoidal, and
/// `perm[k]` is the original column placed at position `k`.
#[derive(Debug, Clone)]
pub(crate) struct Qr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub perm: Vec<usize>,
    pub rank: usize,
}

pub(crate) fn householder_qr(a: &DenseMatrix, pivot: bool) -> Qr {
    let (p, q) = (a.rows, a.cols);
    let mut r = a.clone();
    let mut qm = DenseMatrix::identity(p);
    let mut perm: Vec<usize> = (0..q).collect();
    let mut v = vec![0.0; p];

    for k in 0..p.min(q) {
        if pivot {
            let col_norm2 = |r: &DenseMatrix, j: usize| (k..p).map(|i| r.get(i, j).powi(2)).sum::<f64>();
            let mut best = k;
            let mut best_norm = col_norm2(&r, k);
            for j in k + 1..q {
                let nj = col_norm2(&r, j);
                if nj > best_norm {
                    best = j;
                    best_norm = nj;
                }
            }
            if best != k {
                for i in 0..p {
                    let t = r.get(i, k);
                    r.set(i, k, r.get(i, best));
                    r.set(i, best, t);
                }
                perm.swap(k, best);
            }
        }

        let xnorm = (k..p).map(|i| r.get(i, k).powi(2)).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = r.get(k, k);
        let alpha = if x0 >= 0.0 { -xnorm } else { xnorm };
        for i in k..p {
            v[i] = r.get(i, k);
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..p).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }

        for j in k + 1..q {
            let s: f64 = (k..p).map(|i| v[i] * r.get(i, j)).sum();
            let f = 2.0 * s / vnorm2;
            for i in k..p {
                let val = r.get(i, j) - f * v[i];
                r.set(i, j, val);
            }
        }
        r.set(k, k, alpha);
        for i in k + 1..p {
            r.set(i, k, 0.0);
        }

        for row in 0..p {
            let s: f64 = (k..p).map(|i| qm.get(row, i) * v[i]).sum();
            let f = 2.0 * s / vnorm2;
            for i in k..p {
                let val = qm.get(row, i) - f * v[i];
                qm.set(row, i, val);
            }
        }
    }

    let diag_len = p.min(q);
    let rank = if pivot {
        let top = if diag_len > 0 { r.get(0, 0).abs() } else { 0.0 };
        if top == 0.0 {
            0
        } else {
            (0..diag_len)
                .take_while(|&k| r.get(k, k).abs() > RANK_TOL * top)
                .count()
        }
    } else {
        diag_len
    };

    Qr { q: qm, r, perm, rank }
}

/// Orthonormal basis (as columns) of the row space of `m`.
fn row_space_basis(m: &DenseMatrix) -> (Qr, usize) {
    let qr = householder_qr(&m.transpose(), true);
    let rank = qr.rank;
    (qr, rank)
}

/// Minimum-norm least-squares solution of `M z ≈ r`.
///
/// The rank is decided by a column-pivoted QR of `Mᵀ`; the solution is then
/// restricted to the row space of `M`, where the problem has full column rank.
pub fn least_squares_min_norm(m: &DenseMatrix, r: &[f64]) -> Result<Vec<f64>> {
    check_len("least_squares_min_norm", m.rows, r.len())?;
    let n = m.cols;
    if m.rows == 0 || n == 0 {
        return Ok(vec![0.0; n]);
    }
    let (qr, rank) = row_space_basis(m);
    if rank == 0 {
        return Ok(vec![0.0; n]);
    }

    // Mᵀ Π = Q1 R1  =>  M = Π R1ᵀ Q1ᵀ. With z = Q1 u, minimize ‖R1ᵀ u − Πᵀ r‖.
    let k = m.rows;
    let mut r1t = DenseMatrix::zeros(k, rank);
    for i in 0..rank {
        for j in i..k {
            r1t.set(j, i, qr.r.get(i, j));
        }
    }
    let rhs: Vec<f64> = qr.perm.iter().map(|&p| r[p]).collect();

    let inner = householder_qr(&r1t, false);
    let qtr = inner.q.tr_mul_vec(&rhs)?;
    let mut u = qtr[..rank].to_vec();
    for i in (0..rank).rev() {
        let s: f64 = (i + 1..rank).map(|j| inner.r.get(i, j) * u[j]).sum();
        u[i] = (u[i] - s) / inner.r.get(i, i);
    }

    let mut z = vec![0.0; n];
    for (c, uc) in u.iter().enumerate() {
        for (row, zr) in z.iter_mut().enumerate() {
            *zr += qr.q.get(row, c) * uc;
        }
    }
    Ok(z)
}

/// Orthogonal projection of `v` onto the null space of `m`.
pub fn null_space_project(m: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len("null_space_project", m.cols, v.len())?;
    if m.rows == 0 {
        return Ok(v.to_vec());
    }
    let (qr, rank) = row_space_basis(m);
    let n = m.cols;
    let mut w = v.to_vec();
    // Two passes of classical Gram-Schmidt against the basis restore orthogonality.
    for _ in 0..2 {
        for c in 0..rank {
            let coef: f64 = (0..n).map(|row| qr.q.get(row, c) * w[row]).sum();
            for (row, wr) in w.iter_mut().enumerate() {
                *wr -= coef * qr.q.get(row, c);
            }
        }
    }
    Ok(w)
}
