//! Prover side of the message exchange.
//!
//! The verifier only ever hands a prover [`QubitRequest`]s and a
//! [`RoundKind`]; trapdoor data never leaves [`super::keys::TrapdoorKey`].

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;

use crate::qsim::QuantumState;
use crate::rng::{Rng, Seed};
use crate::{Error, Result, C64};

use super::commit::RoundKind;
use super::keys::{MeasBasis, PublicKey};
use super::register::{self, commit_amps, image_probabilities, project_image};

/// Per-qubit instruction for one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitRequest {
    /// Commit under this public key.
    Delegated(PublicKey),
    /// Measure directly in this basis when asked to respond.
    Direct(MeasBasis),
}

/// The prover's message interface.
pub trait Prover {
    /// Starts a round with a fresh state of `n_qubits`.
    fn prepare(&mut self, n_qubits: usize, seed: Seed) -> Result<()>;
    /// Returns the image `y` for each delegated qubit, `None` elsewhere.
    fn commit(&mut self, requests: &[QubitRequest]) -> Result<Vec<Option<u8>>>;
    /// Per qubit: `(b, x)` or `(u, v)` for delegated qubits, `(outcome, 0)`
    /// for direct ones.
    fn respond(&mut self, kind: RoundKind) -> Result<Vec<(u8, u8)>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Honest,
    /// Answers measurement rounds for delegated qubits with uniform bits.
    BasisGuess,
    /// Commits with the key table cyclically shifted by one entry.
    WrongTable,
}

#[derive(Clone, Debug)]
enum Source {
    Ensemble(Vec<(f64, Vec<C64>)>),
    /// Uniform computational basis state, an unraveling of `I / 2^n`.
    MaximallyMixed(usize),
}

/// A prover simulated by statevector, following one [`Strategy`].
#[derive(Clone, Debug)]
pub struct SimulatedProver {
    source: Source,
    strategy: Strategy,
    n: usize,
    amps: Vec<C64>,
    requests: Vec<QubitRequest>,
    /// Preimage register index for each delegated qubit.
    preimage: Vec<Option<usize>>,
    rng: Option<Rng>,
}

impl SimulatedProver {
    pub fn new(state: &QuantumState, strategy: Strategy) -> Result<Self> {
        let n = state
            .basis()
            .n_qubits()
            .ok_or_else(|| Error::BasisMismatch("provers hold qubit states".into()))?;
        Ok(Self::from_source(Source::Ensemble(state.ensemble()), strategy, n))
    }

    pub fn honest(state: &QuantumState) -> Result<Self> {
        Self::new(state, Strategy::Honest)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        Self::from_source(Source::MaximallyMixed(n_qubits), Strategy::Honest, n_qubits)
    }

    pub fn basis_guess(state: &QuantumState) -> Result<Self> {
        Self::new(state, Strategy::BasisGuess)
    }

    pub fn wrong_table(state: &QuantumState) -> Result<Self> {
        Self::new(state, Strategy::WrongTable)
    }

    fn from_source(source: Source, strategy: Strategy, n: usize) -> Self {
        SimulatedProver {
            source,
            strategy,
            n,
            amps: Vec::new(),
            requests: Vec::new(),
            preimage: Vec::new(),
            rng: None,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    fn rng(&mut self) -> Result<&mut Rng> {
        self.rng
            .as_mut()
            .ok_or_else(|| Error::InvalidState("prover used before prepare".into()))
    }
}

impl Prover for SimulatedProver {
    fn prepare(&mut self, n_qubits: usize, seed: Seed) -> Result<()> {
        if n_qubits != self.n {
            return Err(Error::LengthMismatch(n_qubits, self.n));
        }
        let mut rng = seed.rng();
        self.amps = match &self.source {
            Source::Ensemble(ens) => {
                let p: Vec<f64> = ens.iter().map(|e| e.0).collect();
                ens[register::draw(&mut rng, &p)].1.clone()
            }
            Source::MaximallyMixed(n) => {
                let mut v = vec![C64::new(0.0, 0.0); 1 << n];
                v[rng.random_range(0..1usize << n)] = C64::new(1.0, 0.0);
                v
            }
        };
        self.rng = Some(rng);
        self.requests.clear();
        self.preimage.clear();
        Ok(())
    }

    fn commit(&mut self, requests: &[QubitRequest]) -> Result<Vec<Option<u8>>> {
        if requests.len() != self.n {
            return Err(Error::LengthMismatch(requests.len(), self.n));
        }
        let strategy = self.strategy;
        let mut amps = core::mem::take(&mut self.amps);
        let mut ys = Vec::with_capacity(requests.len());
        let mut preimage = Vec::with_capacity(requests.len());
        for (q, req) in requests.iter().enumerate() {
            match req {
                QubitRequest::Delegated(key) => {
                    let mut key = *key;
                    if strategy == Strategy::WrongTable {
                        key.table.rotate_left(1);
                    }
                    preimage.push(Some(register::n_of(amps.len())));
                    let committed = commit_amps(&amps, q, &key);
                    let p = image_probabilities(&committed);
                    let y = register::draw(self.rng()?, &p) as u8;
                    amps = project_image(&committed, y);
                    ys.push(Some(y));
                }
                QubitRequest::Direct(_) => {
                    preimage.push(None);
                    ys.push(None);
                }
            }
        }
        self.amps = amps;
        self.requests = requests.to_vec();
        self.preimage = preimage;
        Ok(ys)
    }

    fn respond(&mut self, kind: RoundKind) -> Result<Vec<(u8, u8)>> {
        let strategy = self.strategy;
        let requests = core::mem::take(&mut self.requests);
        let preimage = core::mem::take(&mut self.preimage);
        let mut amps = core::mem::take(&mut self.amps);
        let rng = self.rng()?;
        let mut out = Vec::with_capacity(requests.len());
        for (q, req) in requests.iter().enumerate() {
            match (req, preimage[q]) {
                (QubitRequest::Delegated(_), Some(x)) => {
                    let x_basis = kind == RoundKind::Measurement && strategy != Strategy::BasisGuess;
                    if x_basis {
                        register::apply_hadamard(&mut amps, q);
                        register::apply_hadamard(&mut amps, x);
                    }
                    let a = register::measure_z(&mut amps, q, rng);
                    let b = register::measure_z(&mut amps, x, rng);
                    if kind == RoundKind::Measurement && strategy == Strategy::BasisGuess {
                        out.push((rng.random_range(0..2u8), rng.random_range(0..2u8)));
                    } else {
                        out.push((a, b));
                    }
                }
                (QubitRequest::Direct(basis), _) => {
                    if *basis == MeasBasis::X {
                        register::apply_hadamard(&mut amps, q);
                    }
                    out.push((register::measure_z(&mut amps, q, rng), 0));
                }
                _ => return Err(Error::InvalidState("respond called before commit".into())),
            }
        }
        Ok(out)
    }
}

/// Wraps closures as a prover, for custom adversaries.
pub struct FnProver<P, C, R> {
    pub prepare: P,
    pub commit: C,
    pub respond: R,
}

impl<P, C, R> fmt::Debug for FnProver<P, C, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnProver")
    }
}

impl<P, C, R> Prover for FnProver<P, C, R>
where
    P: FnMut(usize, Seed) -> Result<()>,
    C: FnMut(&[QubitRequest]) -> Result<Vec<Option<u8>>>,
    R: FnMut(RoundKind) -> Result<Vec<(u8, u8)>>,
{
    fn prepare(&mut self, n_qubits: usize, seed: Seed) -> Result<()> {
        (self.prepare)(n_qubits, seed)
    }

    fn commit(&mut self, requests: &[QubitRequest]) -> Result<Vec<Option<u8>>> {
        (self.commit)(requests)
    }

    fn respond(&mut self, kind: RoundKind) -> Result<Vec<(u8, u8)>> {
        (self.respond)(kind)
    }
}

impl<T: Prover + ?Sized> Prover for Box<T> {
    fn prepare(&mut self, n_qubits: usize, seed: Seed) -> Result<()> {
        (**self).prepare(n_qubits, seed)
    }

    fn commit(&mut self, requests: &[QubitRequest]) -> Result<Vec<Option<u8>>> {
        (**self).commit(requests)
    }

    fn respond(&mut self, kind: RoundKind) -> Result<Vec<(u8, u8)>> {
        (**self).respond(kind)
    }
}
