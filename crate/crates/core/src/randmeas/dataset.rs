use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::qsim::measure::{apply_local_unitaries, sample_bitstrings, Mat2};
use crate::qsim::state::{Counts, QuantumState};
use crate::randmeas::clifford::{clifford_table, haar_unitary, normalize_phase, same_up_to_phase, N_CLIFFORDS};
use crate::rng::{Seed, RNG_ALGORITHM};
use crate::{Error, Result};

/// Entrywise tolerance for matching explicit unitaries across datasets.
pub const MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ensemble {
    Clifford,
    Haar,
}

impl Ensemble {
    pub fn name(self) -> &'static str {
        match self {
            Ensemble::Clifford => "clifford",
            Ensemble::Haar => "haar",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clifford" => Ok(Ensemble::Clifford),
            "haar" => Ok(Ensemble::Haar),
            _ => Err(Error::InvalidArgument(format!("unknown ensemble {s:?}"))),
        }
    }
}

/// Single-qubit rotation applied before a computational-basis readout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalUnitary {
    /// Index into [`clifford_table`].
    Clifford(u8),
    /// Phase-normalized explicit matrix.
    Explicit(Mat2),
}

impl LocalUnitary {
    pub fn matrix(&self, table: &[Mat2]) -> Result<Mat2> {
        match self {
            LocalUnitary::Clifford(i) => table.get(*i as usize).copied().ok_or(Error::IndexOutOfRange {
                what: "clifford index",
                index: *i as usize,
                len: N_CLIFFORDS,
            }),
            LocalUnitary::Explicit(m) => Ok(*m),
        }
    }

    /// Exact for Clifford indices, within [`MATCH_TOL`] after phase
    /// normalization for explicit matrices.
    pub fn matches(&self, other: &LocalUnitary) -> bool {
        match (self, other) {
            (LocalUnitary::Clifford(a), LocalUnitary::Clifford(b)) => a == b,
            (LocalUnitary::Explicit(a), LocalUnitary::Explicit(b)) => same_up_to_phase(a, b, MATCH_TOL),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub id: u32,
    /// One rotation per qubit, qubit 0 first.
    pub unitaries: Vec<LocalUnitary>,
}

impl MeasurementSetting {
    pub fn matrices(&self, table: &[Mat2]) -> Result<Vec<Mat2>> {
        self.unitaries.iter().map(|u| u.matrix(table)).collect()
    }
}

/// `n_u` settings of independent per-qubit draws.
pub fn sample_settings(n: usize, n_u: usize, ensemble: Ensemble, seed: Seed) -> Result<Vec<MeasurementSetting>> {
    if n_u == 0 {
        return Err(Error::InvalidArgument("at least one setting is required".into()));
    }
    if n_u > u32::MAX as usize {
        return Err(Error::InvalidArgument("too many settings".into()));
    }
    let mut rng = seed.rng();
    Ok((0..n_u)
        .map(|id| MeasurementSetting {
            id: id as u32,
            unitaries: (0..n)
                .map(|_| match ensemble {
                    Ensemble::Clifford => LocalUnitary::Clifford(rand::Rng::random_range(&mut rng, 0..N_CLIFFORDS as u8)),
                    Ensemble::Haar => LocalUnitary::Explicit(haar_unitary(&mut rng)),
                })
                .collect(),
        })
        .collect())
}

/// Seed and generator of a simulated collection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub algorithm: String,
}

/// Randomized-measurement record of one device.
#[derive(Clone, Debug, PartialEq)]
pub struct RandMeasDataset {
    pub device: String,
    pub state_label: String,
    pub n_qubits: usize,
    pub ensemble: Ensemble,
    pub settings: Vec<MeasurementSetting>,
    /// One histogram per setting, each summing to `shots`.
    pub counts: Vec<Counts>,
    pub shots: u64,
    pub provenance: Option<Provenance>,
}

impl RandMeasDataset {
    pub fn n_settings(&self) -> usize {
        self.settings.len()
    }

    /// Checks histogram sums, bitstring lengths, per-qubit rotation counts
    /// and setting-id uniqueness.
    pub fn validate(&self) -> Result<()> {
        if self.counts.len() != self.settings.len() {
            return Err(Error::LengthMismatch(self.counts.len(), self.settings.len()));
        }
        let mut ids: Vec<u32> = self.settings.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate setting id {}", w[0])));
        }
        for (s, c) in self.settings.iter().zip(&self.counts) {
            if s.unitaries.len() != self.n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "setting {} has {} rotations for {} qubits",
                    s.id,
                    s.unitaries.len(),
                    self.n_qubits
                )));
            }
            for u in &s.unitaries {
                match (u, self.ensemble) {
                    (LocalUnitary::Clifford(i), Ensemble::Clifford) if (*i as usize) < N_CLIFFORDS => {}
                    (LocalUnitary::Explicit(m), Ensemble::Haar)
                        if crate::qsim::measure::unitarity_defect(m) <= crate::qsim::measure::UNITARY_TOL => {}
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "setting {} has a rotation outside the {} ensemble",
                            s.id, self.ensemble
                        )))
                    }
                }
            }
            if let Some(b) = c.keys().find(|b| b.len() != self.n_qubits) {
                return Err(Error::InvalidArgument(format!(
                    "setting {}: outcome {b} has the wrong length",
                    s.id
                )));
            }
            let total: u64 = c.values().sum();
            if total != self.shots {
                return Err(Error::InvalidArgument(format!(
                    "setting {}: counts sum to {total}, expected {}",
                    s.id, self.shots
                )));
            }
        }
        Ok(())
    }

    /// Requires equal ensembles and matching rotations on `subsystem`;
    /// otherwise names the first mismatching setting.
    pub fn check_compatible(&self, other: &RandMeasDataset, subsystem: &[usize]) -> Result<()> {
        if self.ensemble != other.ensemble {
            return Err(Error::InvalidArgument(format!(
                "ensembles differ: {} vs {}",
                self.ensemble, other.ensemble
            )));
        }
        if self.n_qubits != other.n_qubits {
            return Err(Error::LengthMismatch(self.n_qubits, other.n_qubits));
        }
        for (k, a) in self.settings.iter().enumerate() {
            let Some(b) = other.settings.get(k) else {
                return Err(Error::SettingsMismatch { setting: a.id as usize });
            };
            if a.id != b.id || subsystem.iter().any(|&q| !a.unitaries[q].matches(&b.unitaries[q])) {
                return Err(Error::SettingsMismatch { setting: a.id as usize });
            }
        }
        if other.settings.len() > self.settings.len() {
            return Err(Error::SettingsMismatch {
                setting: other.settings[self.settings.len()].id as usize,
            });
        }
        Ok(())
    }
}

/// Rotates `state` by every setting and records `n_m` shots each. Setting
/// `k` samples from `seed.split(k)`.
pub fn collect(
    state: &QuantumState,
    settings: &[MeasurementSetting],
    n_m: u64,
    seed: Seed,
    device: &str,
    state_label: &str,
) -> Result<RandMeasDataset> {
    let n = state
        .basis()
        .n_qubits()
        .ok_or_else(|| Error::BasisMismatch("randomized measurements need qubits".into()))?;
    if settings.is_empty() {
        return Err(Error::InvalidArgument("no settings".into()));
    }
    let ensemble = match settings[0].unitaries.first() {
        Some(LocalUnitary::Explicit(_)) => Ensemble::Haar,
        _ => Ensemble::Clifford,
    };
    let table = clifford_table();
    let mut counts = Vec::with_capacity(settings.len());
    for (k, s) in settings.iter().enumerate() {
        let rotated = apply_local_unitaries(state, &s.matrices(&table)?)?;
        counts.push(sample_bitstrings(&rotated, n_m, seed.split(k as u64))?);
    }
    let ds = RandMeasDataset {
        device: device.into(),
        state_label: state_label.into(),
        n_qubits: n,
        ensemble,
        settings: settings
            .iter()
            .map(|s| MeasurementSetting {
                id: s.id,
                unitaries: s
                    .unitaries
                    .iter()
                    .map(|u| match u {
                        LocalUnitary::Explicit(m) => LocalUnitary::Explicit(normalize_phase(m)),
                        c => *c,
                    })
                    .collect(),
            })
            .collect(),
        counts,
        shots: n_m,
        provenance: Some(Provenance {
            seed: seed.0,
            algorithm: RNG_ALGORITHM.into(),
        }),
    };
    ds.validate()?;
    Ok(ds)
}
