//! Exact state-vector and density-matrix simulation.

pub mod fermion;
pub mod measure;
pub mod operator;
pub mod pauli;
pub mod spectrum;
pub mod state;

pub use fermion::{build_fermion_basis, FermionOperator, FermionSector, FermionTerm, Ladder, LatticeSpec, Spin};
pub use measure::{
    apply_local_unitaries, expectation, reduced_density, sample_bitstrings, sample_observable, BornDistribution, Mat2,
};
pub use operator::{assemble_operator, OperatorMatrix, Term};
pub use pauli::{Pauli, PauliSum, PauliTerm};
pub use spectrum::{ground_state, thermal_state, time_evolve};
pub use state::{Basis, Bitstring, Counts, QuantumState};
