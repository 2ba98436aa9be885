//! Energy verification by delegated X/Z measurements.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::qsim::Pauli;
use crate::rng::Seed;
use crate::stats::jackknife_mean;
use crate::{Error, Result};

use super::commit::RoundKind;
use super::instance::HamiltonianInstance;
use super::keys::{decode_outcome, enumerate_functions, keygen_with, MeasBasis, TrapdoorKey};
use super::prover::{Prover, QubitRequest};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelegationMode {
    /// Every qubit goes through a trapdoor commitment.
    Full,
    /// Only this qubit is delegated; the rest are measured directly.
    Single(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub rounds: u64,
    pub test_fraction: f64,
    pub seed: Seed,
    pub mode: DelegationMode,
    /// Keep every round's transcript in the report.
    pub record: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            rounds: 1000,
            test_fraction: 0.5,
            seed: Seed(0),
            mode: DelegationMode::Full,
            record: false,
        }
    }
}

/// One round of energy verification as recorded by the verifier.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub index: u64,
    pub kind: RoundKind,
    pub term: usize,
    /// Key label per qubit, `None` for directly measured qubits.
    pub key_labels: Vec<Option<u8>>,
    pub images: Vec<Option<u8>>,
    pub responses: Vec<(u8, u8)>,
    /// Decoded outcome per qubit, measurement rounds only.
    pub decoded: Vec<u8>,
    /// Estimator sample, measurement rounds only.
    pub value: Option<f64>,
    /// Test rounds only.
    pub passed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Accept,
    Reject(String),
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        *self == Verdict::Accept
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub verdict: Verdict,
    pub energy: f64,
    pub energy_error: f64,
    pub threshold: f64,
    pub rounds_run: u64,
    pub tests: u64,
    pub tests_passed: u64,
    pub measurements: u64,
    /// Round index of the first failed test.
    pub failed_round: Option<u64>,
    pub transcripts: Vec<RoundRecord>,
}

impl VerifyReport {
    pub fn test_pass_rate(&self) -> f64 {
        if self.tests == 0 {
            1.0
        } else {
            self.tests_passed as f64 / self.tests as f64
        }
    }
}

fn sample_term(weights: &[f64], r: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = r * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Runs the interactive energy test against `prover`.
///
/// Each round the verifier draws a non-identity term with probability
/// proportional to `|c|`, sends per-qubit requests (X keys on X factors,
/// Z keys elsewhere), collects images, then flips the test coin. The
/// estimate is `offset + sum|c| * sign(c) * prod (-1)^outcome` averaged over
/// measurement rounds.
pub fn verify_energy<P: Prover + ?Sized>(
    instance: &HamiltonianInstance,
    prover: &mut P,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    if !(0.0..=1.0).contains(&opts.test_fraction) {
        return Err(Error::InvalidArgument("test fraction must lie in [0, 1]".into()));
    }
    let n = instance.n_qubits;
    if let DelegationMode::Single(q) = opts.mode {
        if q >= n {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: q,
                len: n,
            });
        }
    }
    let families = enumerate_functions();
    let (offset, weight) = instance.offset_and_weight();
    let active: Vec<usize> = (0..instance.terms.len())
        .filter(|&i| !instance.terms[i].is_identity())
        .collect();
    let weights: Vec<f64> = active.iter().map(|&i| instance.terms[i].coefficient.abs()).collect();

    let mut samples = Vec::new();
    let mut report = VerifyReport {
        verdict: Verdict::Accept,
        energy: f64::NAN,
        energy_error: f64::NAN,
        threshold: instance.threshold(),
        rounds_run: 0,
        tests: 0,
        tests_passed: 0,
        measurements: 0,
        failed_round: None,
        transcripts: Vec::new(),
    };

    for r in 0..opts.rounds {
        let round_seed = opts.seed.split(r);
        let mut rng = round_seed.split(0).rng();
        let term = if active.is_empty() {
            usize::MAX
        } else {
            active[sample_term(&weights, rng.random::<f64>())]
        };
        let mut keys: Vec<Option<TrapdoorKey>> = Vec::with_capacity(n);
        let mut requests = Vec::with_capacity(n);
        for q in 0..n {
            let basis = match instance.terms.get(term).map(|t| t.factors[q]) {
                Some(Pauli::X) => MeasBasis::X,
                _ => MeasBasis::Z,
            };
            let delegated = match opts.mode {
                DelegationMode::Full => true,
                DelegationMode::Single(d) => d == q,
            };
            if delegated {
                let k = keygen_with(basis, &mut rng, &families);
                requests.push(QubitRequest::Delegated(k.public));
                keys.push(Some(k));
            } else {
                requests.push(QubitRequest::Direct(basis));
                keys.push(None);
            }
        }
        prover.prepare(n, round_seed.split(1))?;
        let images = prover.commit(&requests)?;
        let kind = if rng.random::<f64>() < opts.test_fraction {
            RoundKind::Test
        } else {
            RoundKind::Measurement
        };
        let responses = prover.respond(kind)?;
        if images.len() != n || responses.len() != n {
            return Err(Error::LengthMismatch(responses.len().min(images.len()), n));
        }
        report.rounds_run += 1;

        let mut record = RoundRecord {
            index: r,
            kind,
            term,
            key_labels: keys.iter().map(|k| k.map(|k| k.public.label)).collect(),
            images: images.clone(),
            responses: responses.clone(),
            decoded: Vec::new(),
            value: None,
            passed: None,
        };
        match kind {
            RoundKind::Test => {
                report.tests += 1;
                let ok = keys.iter().zip(&images).zip(&responses).all(|((k, y), (b, x))| match (k, y) {
                    (Some(k), Some(y)) => k.public.eval(*b, *x) == *y,
                    (None, _) => true,
                    (Some(_), None) => false,
                });
                record.passed = Some(ok);
                if ok {
                    report.tests_passed += 1;
                } else {
                    report.failed_round = Some(r);
                    report.verdict = Verdict::Reject(format!("test round {r} failed"));
                }
            }
            RoundKind::Measurement => {
                report.measurements += 1;
                let mut decoded = Vec::with_capacity(n);
                for q in 0..n {
                    let bit = match (&keys[q], images[q]) {
                        (Some(k), Some(y)) => decode_outcome(k, y, responses[q].0, responses[q].1),
                        (Some(_), None) => Err(Error::InvalidState(format!("no image for qubit {q}"))),
                        (None, _) => Ok(responses[q].0 & 1),
                    };
                    match bit {
                        Ok(b) => decoded.push(b),
                        Err(e) => {
                            report.failed_round = Some(r);
                            report.verdict = Verdict::Reject(format!("round {r}: {e}"));
                            decoded.push(0);
                        }
                    }
                }
                if report.failed_round.is_none() && term != usize::MAX {
                    let t = &instance.terms[term];
                    let parity = t.support().iter().map(|&q| decoded[q] as u32).sum::<u32>() % 2;
                    let sign = if parity == 1 { -1.0 } else { 1.0 };
                    let v = weight * t.coefficient.signum() * sign;
                    samples.push(v);
                    record.value = Some(v);
                }
                record.decoded = decoded;
            }
        }
        if opts.record {
            report.transcripts.push(record);
        }
        if report.failed_round.is_some() {
            break;
        }
    }

    if active.is_empty() {
        report.energy = offset;
        report.energy_error = 0.0;
    } else if !samples.is_empty() {
        let (m, e) = jackknife_mean(&samples);
        report.energy = offset + m;
        report.energy_error = e;
    }
    if report.verdict.accepted() {
        if report.energy.is_nan() {
            report.verdict = Verdict::Reject("no measurement rounds".into());
        } else if report.energy >= report.threshold {
            report.verdict = Verdict::Reject(format!(
                "energy {:.6} not below threshold {:.6}",
                report.energy, report.threshold
            ));
        }
    }
    Ok(report)
}
