//! Parent-Hamiltonian reconstruction from stationarity constraints.
//!
//! For a state `rho` with `[H, rho] = 0` and `H = sum_m c_m S_m`, every
//! Hermitian `A` gives `sum_m c_m <-i[A, S_m]> = 0`. Stacking these rows
//! into `K` and taking its lowest right singular vector recovers `c` up to
//! scale when the null space is one-dimensional.

pub mod basis;
pub mod constraints;
pub mod curve;
pub mod kmatrix;
pub mod reconstruct;

pub use basis::{build_operator_basis, BasisElement, ElementKind, OperatorBasis};
pub use constraints::{
    build_constraints, candidate_constraints, select_constraints, Constraint, ConstraintLabel, ConstraintSet,
    Selection,
};
pub use curve::{learning_curve, Control, CurveRow, CurveSpec, LearningCurve};
pub use kmatrix::{k_matrix_exact, k_matrix_sampled, KContext, KMatrix, SampledKModel, SamplingMode};
pub use reconstruct::{fix_sign, parameter_distance, reconstruct, reconstruct_with_reference, LearnResult};
