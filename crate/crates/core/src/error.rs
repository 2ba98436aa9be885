use alloc::string::String;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("{what} index {index} out of range (size {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("eigensolver did not converge after {iterations} restarts (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("setting for qubit {qubit} is not unitary (deviation {deviation:e})")]
    NonUnitary { qubit: usize, deviation: f64 },
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("constraint pool exhausted: found {found} of {requested} requested constraints")]
    ConstraintPoolExhausted { requested: usize, found: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("settings differ at setting {setting}")]
    SettingsMismatch { setting: usize },
    #[error("purity estimation needs at least 2 shots per setting, got {0}")]
    TooFewShots(u64),
    #[error("measurement budget cap {cap} reached for N = {qubits}")]
    BudgetCap { qubits: usize, cap: u64 },
    #[error("unsupported gate arity {0}")]
    UnsupportedGateArity(usize),
    #[error("register collision on qubit {0}")]
    RegisterCollision(usize),
    #[error("image {0:02b} has no preimage under the key")]
    NoPreimage(u8),
    #[error("term {0} is not an X/Z term")]
    NotXz(usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
