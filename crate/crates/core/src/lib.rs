//! Polyhedral active set algorithm for
//!
//! ```text
//! minimize f(x)  subject to  Ax ≤ b
//! ```
//!
//! with `f` continuously differentiable. The solver alternates between a
//! gradient projection phase, which identifies the active constraints, and
//! a face phase, which optimizes with the identified constraints pinned.
//!
//! ```
//! use pasa_core::{solve, DenseMatrix, PasaParams, Polyhedron, QuadraticObjective, Status};
//!
//! let poly = Polyhedron::boxed(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
//! let f = QuadraticObjective::new(DenseMatrix::identity(2), vec![-2.0, -2.0]).unwrap();
//! let r = solve(&f, &poly, &[3.0, 3.0], &PasaParams::default()).unwrap();
//! assert_eq!(r.status, Status::Converged);
//! assert!((r.x[0] - 1.0).abs() < 1e-10 && (r.x[1] - 1.0).abs() < 1e-10);
//! ```
//!
//! Constraint rows are indexed from 0.

pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod phase_one;
pub mod phase_two;
pub mod polyhedron;
pub mod problems;
pub mod projection;

pub use diagnostics::{face_anchor, lemma_ratios, stabilizes, RunDiagnostics};
pub use driver::{solve, Branch, IterateTrace, PasaParams, Phase, SolveResult, SolveStats, Status};
pub use error::{PasaError, Result};
pub use linalg::DenseMatrix;
pub use measures::{direction, global_error, local_error, snapshot, step_point, undecided_set, StationaritySnapshot};
pub use phase_one::{gpa_step, GpaStep};
pub use phase_two::{lco_startup_step, lco_step, FaceSolver, LcoState};
pub use polyhedron::{make_face, Face, IndexSet, Polyhedron, Tolerances};
pub use problems::{
    brute_force_project, degenerate_qp_suite, kkt_violation, FnObjective, KnownSolution, Objective, QuadraticObjective,
    Rosenbrock, TestProblem,
};
pub use projection::{project, project_face, ProjectionResult};
