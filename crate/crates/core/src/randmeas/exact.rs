use alloc::vec::Vec;

use crate::qsim::measure::{apply_local_unitaries, reduced_density, Mat2};
use crate::qsim::state::QuantumState;
use crate::randmeas::clifford::{clifford_table, N_CLIFFORDS};
use crate::randmeas::dataset::{sample_settings, Ensemble, MeasurementSetting};
use crate::randmeas::estimators::{check_subsystem, cross_correlation, Estimate};
use crate::rng::Seed;
use crate::stats::{mean, sample_variance};
use crate::{Error, Result};

/// Largest subsystem averaged over the full Clifford product group.
pub const MAX_ENUMERATED_QUBITS: usize = 3;

/// Born probabilities of `state` rotated by `setting` and marginalized to
/// `subsystem` (indexed like a bitstring over the subsystem).
pub fn setting_probabilities(state: &QuantumState, setting: &[Mat2], subsystem: &[usize]) -> Result<Vec<f64>> {
    let n = state
        .basis()
        .n_qubits()
        .ok_or_else(|| Error::BasisMismatch("randomized measurements need qubits".into()))?;
    check_subsystem(n, subsystem)?;
    let probs = apply_local_unitaries(state, setting)?.probabilities();
    let mut out = alloc::vec![0.0; 1usize << subsystem.len()];
    for (i, p) in probs.iter().enumerate() {
        let mut a = 0usize;
        for &q in subsystem {
            a = (a << 1) | ((i >> (n - 1 - q)) & 1);
        }
        out[a] += p;
    }
    Ok(out)
}

fn pair_value(r1: &QuantumState, r2: &QuantumState, gates: &[Mat2], all: &[usize]) -> Result<f64> {
    let p = setting_probabilities(r1, gates, all)?;
    let q = setting_probabilities(r2, gates, all)?;
    Ok(cross_correlation(&p, &q))
}

/// Infinite-shot overlap estimator. Clifford subsystems of up to
/// [`MAX_ENUMERATED_QUBITS`] qubits are averaged over all `24^{N_A}`
/// settings and carry zero error; otherwise `mc_settings` random settings
/// are drawn from `seed` and the standard error of the mean is reported.
pub fn exact_mode_overlap(
    s1: &QuantumState,
    s2: &QuantumState,
    ensemble: Ensemble,
    subsystem: &[usize],
    mc_settings: usize,
    seed: Seed,
) -> Result<Estimate> {
    s1.basis().ensure_same(s2.basis())?;
    let r1 = reduced_density(s1, subsystem)?;
    let r2 = reduced_density(s2, subsystem)?;
    let k = subsystem.len();
    let all: Vec<usize> = (0..k).collect();
    let table = clifford_table();
    if ensemble == Ensemble::Clifford && k <= MAX_ENUMERATED_QUBITS {
        let total = N_CLIFFORDS.pow(k as u32);
        let mut acc = 0.0;
        let mut gates = alloc::vec![table[0]; k];
        for code in 0..total {
            let mut c = code;
            for g in gates.iter_mut().rev() {
                *g = table[c % N_CLIFFORDS];
                c /= N_CLIFFORDS;
            }
            acc += pair_value(&r1, &r2, &gates, &all)?;
        }
        return Ok(Estimate {
            value: acc / total as f64,
            error: 0.0,
            per_setting: Vec::new(),
        });
    }
    if mc_settings == 0 {
        return Err(Error::InvalidArgument("Monte Carlo average needs settings".into()));
    }
    let settings = sample_settings(k, mc_settings, ensemble, seed)?;
    let vals: Vec<f64> = settings
        .iter()
        .map(|s: &MeasurementSetting| pair_value(&r1, &r2, &s.matrices(&table)?, &all))
        .collect::<Result<_>>()?;
    let error = if vals.len() > 1 {
        libm::sqrt(sample_variance(&vals) / vals.len() as f64)
    } else {
        0.0
    };
    Ok(Estimate {
        value: mean(&vals),
        error,
        per_setting: vals,
    })
}

/// `F_max` from infinite-shot overlaps and purities.
pub fn exact_mode_fmax(
    s1: &QuantumState,
    s2: &QuantumState,
    ensemble: Ensemble,
    subsystem: &[usize],
    mc_settings: usize,
    seed: Seed,
) -> Result<f64> {
    let o = exact_mode_overlap(s1, s2, ensemble, subsystem, mc_settings, seed)?.value;
    let p1 = exact_mode_overlap(s1, s1, ensemble, subsystem, mc_settings, seed)?.value;
    let p2 = exact_mode_overlap(s2, s2, ensemble, subsystem, mc_settings, seed)?.value;
    Ok(o / p1.max(p2))
}

/// Dense `Tr(rho_A sigma_A)` and `F_max` on a subsystem.
pub fn dense_fmax(s1: &QuantumState, s2: &QuantumState, subsystem: &[usize]) -> Result<(f64, f64)> {
    let r1 = reduced_density(s1, subsystem)?;
    let r2 = reduced_density(s2, subsystem)?;
    let o = r1.overlap(&r2)?;
    Ok((o, o / r1.purity().max(r2.purity())))
}
