//! Fixed instances shared by the benchmarks in `benches/`.

use pasa_core::{degenerate_qp_suite, DenseMatrix, Polyhedron, QuadraticObjective, Rosenbrock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random polyhedron with `m` rows in `n` dimensions that contains the
/// origin, and a batch of points to project onto it.
pub fn projection_case(n: usize, m: usize, points: usize, seed: u64) -> (Polyhedron, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |k: usize, r: f64| -> Vec<f64> { (0..k).map(|_| rng.gen_range(-r..=r)).collect() };
    let rows: Vec<Vec<f64>> = (0..m).map(|_| draw(n, 2.0)).collect();
    let b = draw(m, 1.0).into_iter().map(f64::abs).collect();
    let poly = Polyhedron::new(DenseMatrix::from_rows(&rows, n).expect("sized"), b).expect("valid");
    let zs = (0..points).map(|_| draw(n, 3.0)).collect();
    (poly, zs)
}

/// Two-dimensional Rosenbrock on `[−2, 2]²`, started at `(−1.2, 1)`.
pub fn box_rosenbrock() -> (Rosenbrock, Polyhedron, Vec<f64>) {
    let poly = Polyhedron::boxed(&[-2.0, -2.0], &[2.0, 2.0]).expect("valid");
    (Rosenbrock::new(2).expect("n >= 2"), poly, vec![-1.2, 1.0])
}

/// The degenerate three-dimensional QP from the test suite, started at the origin.
pub fn degenerate() -> (QuadraticObjective, Polyhedron, Vec<f64>) {
    let p = degenerate_qp_suite()
        .into_iter()
        .find(|p| p.name == "degenerate-r3")
        .expect("suite has the r3 instance");
    (p.objective, p.poly, vec![0.0; 3])
}
