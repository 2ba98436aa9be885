//! Classical verification of delegated X/Z measurements with toy trapdoor
//! commitments, circuit-to-Hamiltonian clock instances, and energy tests
//! against honest and cheating provers.

pub mod clock;
pub mod commit;
pub mod energy;
pub mod instance;
pub mod keys;
pub mod prover;
mod register;

pub use clock::{build_clock_instance, Circuit, ClockInstance, Gate};
pub use commit::{
    commit, commit_measure_image, decode, delegate, run_round, CommittedState, DelegationStats, ImageOutcome,
    ProtocolTranscript, RoundKind,
};
pub use energy::{verify_energy, DelegationMode, RoundRecord, Verdict, VerifyOptions, VerifyReport};
pub use instance::HamiltonianInstance;
pub use keys::{decode_outcome, enumerate_functions, keygen, MeasBasis, PublicKey, Trapdoor, TrapdoorKey};
pub use prover::{FnProver, Prover, QubitRequest, SimulatedProver, Strategy};
