//! Randomized measurements: shared local rotations, per-device datasets,
//! and the Hamming-kernel overlap, purity and `F_max` estimators.
//!
//! For datasets `i` and `j` taken with identical rotations `U`, the overlap
//! estimator is `2^{N_A} sum_{s,s'} (-2)^{-D[s,s']} P_U^i(s) P_U^j(s')`,
//! averaged over settings.

pub mod clifford;
pub mod dataset;
pub mod estimators;
pub mod exact;
pub mod scaling;

pub use clifford::{clifford_table, haar_unitary, normalize_phase, N_CLIFFORDS};
pub use dataset::{
    collect, sample_settings, Ensemble, LocalUnitary, MeasurementSetting, Provenance, RandMeasDataset,
};
pub use estimators::{
    estimate_fmax, estimate_overlap, estimate_purity, hamming_kernel, Estimate, FidelityEstimate, ERROR_METHOD,
};
pub use exact::{dense_fmax, exact_mode_fmax, exact_mode_overlap, setting_probabilities};
pub use scaling::{scaling_probe, ScalingOptions, ScalingRow, ScalingTable};
