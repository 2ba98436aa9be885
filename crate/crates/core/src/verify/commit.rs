//! Single-qubit delegation: commitment, image measurement, rounds and
//! decoding.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;

use crate::linalg::CMatrix;
use crate::qsim::state::StateData;
use crate::qsim::{Basis, QuantumState};
use crate::rng::Seed;
use crate::{Error, Result, C64};

use super::keys::{decode_outcome, keygen_with, enumerate_functions, MeasBasis, PublicKey, TrapdoorKey};
use super::register::{self, commit_amps, image_probabilities, project_image};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoundKind {
    Test,
    Measurement,
}

impl fmt::Display for RoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundKind::Test => "test",
            RoundKind::Measurement => "measurement",
        })
    }
}

/// A state with preimage and image registers appended for one delegated
/// qubit. The three new qubits are the last three of `state`.
#[derive(Clone, Debug)]
pub struct CommittedState {
    pub state: QuantumState,
    pub system: usize,
    pub preimage: usize,
    pub image: [usize; 2],
    pub key: PublicKey,
}

fn qubit_count(state: &QuantumState) -> Result<usize> {
    state
        .basis()
        .n_qubits()
        .ok_or_else(|| Error::BasisMismatch(format!("commitment needs a qubit register, got {}", state.basis())))
}

/// Builds `2^{-1/2} sum_{b,x} alpha_b |b>|x>|y(b,x)>` with the target qubit
/// playing `b`.
pub fn commit(state: &QuantumState, target: usize, key: &PublicKey) -> Result<CommittedState> {
    let n = qubit_count(state)?;
    if target >= n {
        return Err(Error::IndexOutOfRange {
            what: "qubit",
            index: target,
            len: n,
        });
    }
    let basis = Basis::qubits(n + 3)?;
    let data = match state.data() {
        StateData::Pure(v) => StateData::Pure(commit_amps(v, target, key)),
        StateData::Mixed(rho) => {
            let d = rho.nrows();
            let mut left = CMatrix::zeros(8 * d, d);
            for c in 0..d {
                let col: Vec<C64> = rho.column(c).iter().copied().collect();
                for (r, v) in commit_amps(&col, target, key).into_iter().enumerate() {
                    left[(r, c)] = v;
                }
            }
            let mut out = CMatrix::zeros(8 * d, 8 * d);
            for r in 0..8 * d {
                let row: Vec<C64> = left.row(r).iter().map(|z| z.conj()).collect();
                for (c, v) in commit_amps(&row, target, key).into_iter().enumerate() {
                    out[(r, c)] = v.conj();
                }
            }
            StateData::Mixed(out)
        }
    };
    Ok(CommittedState {
        state: QuantumState::from_parts(basis, data),
        system: target,
        preimage: n,
        image: [n + 1, n + 2],
        key: *key,
    })
}

/// Image measurement result. `state` keeps the system and preimage
/// registers; the image register is dropped.
#[derive(Clone, Debug)]
pub struct ImageOutcome {
    pub y: u8,
    pub probabilities: [f64; 4],
    pub state: QuantumState,
}

pub fn commit_measure_image(committed: &CommittedState, seed: Seed) -> Result<ImageOutcome> {
    let mut rng = seed.rng();
    let n = qubit_count(&committed.state)? - 2;
    let basis = Basis::qubits(n)?;
    let (probabilities, state) = match committed.state.data() {
        StateData::Pure(v) => {
            let p = image_probabilities(v);
            let y = register::draw(&mut rng, &p) as u8;
            (p, (y, StateData::Pure(project_image(v, y))))
        }
        StateData::Mixed(rho) => {
            let mut p = [0.0; 4];
            for i in 0..rho.nrows() {
                p[i & 3] += rho[(i, i)].re;
            }
            let y = register::draw(&mut rng, &p);
            let d = rho.nrows() / 4;
            let mut out = CMatrix::zeros(d, d);
            for r in 0..d {
                for c in 0..d {
                    out[(r, c)] = rho[(4 * r + y, 4 * c + y)] / p[y];
                }
            }
            (p, (y as u8, StateData::Mixed(out)))
        }
    };
    Ok(ImageOutcome {
        y: state.0,
        probabilities,
        state: QuantumState::from_parts(basis, state.1),
    })
}

/// One round as seen by the verifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTranscript {
    pub kind: RoundKind,
    pub key_label: u8,
    pub y: u8,
    /// `(b, x)` in a test round, `(u, v)` in a measurement round.
    pub outcomes: (u8, u8),
    /// Test rounds only.
    pub passed: Option<bool>,
    pub seed: u64,
}

/// Honest prover behaviour after committing: measure the image, then the
/// system and preimage qubits in Z (test) or X (measurement).
pub fn run_round(kind: RoundKind, committed: &CommittedState, seed: Seed) -> Result<ProtocolTranscript> {
    let image = commit_measure_image(committed, seed.split(0))?;
    let mut rng = seed.split(1).rng();
    let mut amps = match image.state.data() {
        StateData::Pure(v) => v.clone(),
        StateData::Mixed(_) => {
            let ens = image.state.ensemble();
            let p: Vec<f64> = ens.iter().map(|e| e.0).collect();
            ens[register::draw(&mut rng, &p)].1.clone()
        }
    };
    let (s, x) = (committed.system, committed.preimage);
    if kind == RoundKind::Measurement {
        register::apply_hadamard(&mut amps, s);
        register::apply_hadamard(&mut amps, x);
    }
    let a = register::measure_z(&mut amps, s, &mut rng);
    let b = register::measure_z(&mut amps, x, &mut rng);
    let passed = (kind == RoundKind::Test).then(|| committed.key.eval(a, b) == image.y);
    Ok(ProtocolTranscript {
        kind,
        key_label: committed.key.label,
        y: image.y,
        outcomes: (a, b),
        passed,
        seed: seed.0,
    })
}

/// Decoded outcome of a measurement round.
pub fn decode(transcript: &ProtocolTranscript, key: &TrapdoorKey) -> Result<u8> {
    if transcript.kind != RoundKind::Measurement {
        return Err(Error::InvalidArgument("only measurement rounds carry an outcome".into()));
    }
    if transcript.key_label != key.public.label {
        return Err(Error::InvalidArgument(format!(
            "transcript key {} does not match key {}",
            transcript.key_label, key.public.label
        )));
    }
    decode_outcome(key, transcript.y, transcript.outcomes.0, transcript.outcomes.1)
}

/// Outcome statistics of repeated single-qubit delegation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DelegationStats {
    /// Decoded outcome counts `[n0, n1]` over measurement rounds.
    pub counts: [u64; 2],
    pub tests: u64,
    pub tests_passed: u64,
}

impl DelegationStats {
    pub fn frequency(&self, outcome: u8) -> f64 {
        self.counts[outcome as usize & 1] as f64 / (self.counts[0] + self.counts[1]) as f64
    }

    pub fn pass_rate(&self) -> f64 {
        self.tests_passed as f64 / self.tests as f64
    }
}

/// Delegates a measurement of `target` in `basis` to an honest prover for
/// `rounds` rounds, each a test round with probability `test_fraction`.
pub fn delegate(
    state: &QuantumState,
    target: usize,
    basis: MeasBasis,
    rounds: u64,
    test_fraction: f64,
    seed: Seed,
) -> Result<DelegationStats> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument("test fraction must lie in [0, 1]".into()));
    }
    let families = enumerate_functions();
    let mut stats = DelegationStats::default();
    for r in 0..rounds {
        let round_seed = seed.split(r);
        let mut rng = round_seed.split(0).rng();
        let key = keygen_with(basis, &mut rng, &families);
        let kind = if rng.random::<f64>() < test_fraction {
            RoundKind::Test
        } else {
            RoundKind::Measurement
        };
        let committed = commit(state, target, &key.public)?;
        let t = run_round(kind, &committed, round_seed.split(1))?;
        match kind {
            RoundKind::Test => {
                stats.tests += 1;
                stats.tests_passed += u64::from(t.passed == Some(true));
            }
            RoundKind::Measurement => stats.counts[decode(&t, &key)? as usize] += 1,
        }
    }
    Ok(stats)
}
