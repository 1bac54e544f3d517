#![allow(dead_code)]

use pasa_core::linalg::dot;
use pasa_core::{project, DenseMatrix, Polyhedron, QuadraticObjective, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: Tolerances = Tolerances { act: 1e-10, feas: 1e-9 };

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..=r)).collect()
}

/// Random nonempty polyhedron with `n ≤ 4`, `m ≤ 8`, plus a point known to
/// be feasible. Some rows pass through that point and one may be repeated.
pub fn random_polyhedron(rng: &mut ChaCha8Rng) -> (Polyhedron, Vec<f64>) {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=8);
    let mut rows: Vec<Vec<f64>> = (0..m).map(|_| random_vec(rng, n, 2.0)).collect();
    if m >= 2 && rng.gen_bool(0.1) {
        rows[m - 1] = rows[0].clone();
    }
    let inside = random_vec(rng, n, 1.0);
    let b = rows
        .iter()
        .map(|r| {
            dot(r, &inside)
                + if rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
        })
        .collect();
    (
        Polyhedron::new(DenseMatrix::from_rows(&rows, n).unwrap(), b).unwrap(),
        inside,
    )
}

/// A feasible point: either the certified one or the projection of a random point.
pub fn feasible_point(rng: &mut ChaCha8Rng, poly: &Polyhedron, inside: &[f64]) -> Vec<f64> {
    if rng.gen_bool(0.3) {
        inside.to_vec()
    } else {
        project(poly, &random_vec(rng, poly.dim(), 3.0)).unwrap().point
    }
}

/// `Q = MᵀM`, plus `I` when `strongly_convex`.
pub fn random_quadratic(rng: &mut ChaCha8Rng, n: usize, strongly_convex: bool) -> QuadraticObjective {
    let m: Vec<Vec<f64>> = (0..n).map(|_| random_vec(rng, n, 1.0)).collect();
    let mut q = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let shift = if strongly_convex && i == j { 1.0 } else { 0.0 };
            q.set(i, j, (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() + shift);
        }
    }
    QuadraticObjective::new(q, random_vec(rng, n, 2.0)).unwrap()
}

/// Largest absolute eigenvalue of a symmetric matrix by cyclic Jacobi sweeps.
pub fn spectral_norm(q: &DenseMatrix) -> f64 {
    let n = q.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| q.row(i).to_vec()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
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
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kr) = (row[p], row[r]);
                    row[p] = c * kp - s * kr;
                    row[r] = s * kp + c * kr;
                }
                for k in 0..n {
                    let (pk, rk) = (a[p][k], a[r][k]);
                    a[p][k] = c * pk - s * rk;
                    a[r][k] = s * pk + c * rk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max)
}

/// Rank of a small dense matrix by Gaussian elimination with partial pivoting.
pub fn rank(m: &DenseMatrix) -> usize {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<f64>> = (0..rows).map(|i| m.row(i).to_vec()).collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else {
            break;
        };
        if a[p][c].abs() <= 1e-9 * scale {
            continue;
        }
        a.swap(r, p);
        for i in r + 1..rows {
            let f = a[i][c] / a[r][c];
            for k in c..cols {
                a[i][k] -= f * a[r][k];
            }
        }
        r += 1;
    }
    r
}
