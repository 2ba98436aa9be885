use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::pow;

use crate::qsim::state::{Bitstring, Counts};
use crate::randmeas::dataset::RandMeasDataset;
use crate::stats::jackknife_error;
use crate::{Error, Result};

/// Name recorded for the error-bar method.
pub const ERROR_METHOD: &str = "jackknife-leave-one-setting-out";

/// `(-2)^(-D)` with `D` the Hamming distance.
pub fn hamming_kernel(s: &Bitstring, t: &Bitstring) -> Result<f64> {
    let d = s.hamming(t)?;
    Ok(pow(-2.0, -(d as f64)))
}

/// Applies `[[1, -1/2], [-1/2, 1]]` to every qubit of a vector indexed by
/// bitstrings, i.e. `v -> sum_t (-2)^(-D[s,t]) v_t`.
pub fn kernel_transform(v: &mut [f64]) {
    let n = v.len().trailing_zeros();
    for b in 0..n {
        let mask = 1usize << b;
        for i in 0..v.len() {
            if i & mask == 0 {
                let (x, y) = (v[i], v[i | mask]);
                v[i] = x - 0.5 * y;
                v[i | mask] = y - 0.5 * x;
            }
        }
    }
}

/// Histogram marginalized to `subsystem` as a dense vector of counts.
pub fn marginal_counts(counts: &Counts, subsystem: &[usize]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; 1usize << subsystem.len()];
    for (b, &c) in counts {
        out[b.marginal(subsystem)?.bits() as usize] += c as f64;
    }
    Ok(out)
}

pub(crate) fn check_subsystem(n: usize, subsystem: &[usize]) -> Result<()> {
    if subsystem.is_empty() {
        return Err(Error::InvalidArgument("empty subsystem".into()));
    }
    if subsystem.len() > 20 {
        return Err(Error::InvalidArgument(format!("subsystem of {} qubits is too large", subsystem.len())));
    }
    for (a, &q) in subsystem.iter().enumerate() {
        if q >= n {
            return Err(Error::IndexOutOfRange { what: "qubit", index: q, len: n });
        }
        if subsystem[..a].contains(&q) {
            return Err(Error::RegisterCollision(q));
        }
    }
    Ok(())
}

/// `2^{N_A} sum K(s,s') p(s) q(s')`, symmetric in `p` and `q` bit for bit.
pub fn cross_correlation(p: &[f64], q: &[f64]) -> f64 {
    let scale = p.len() as f64;
    let mut kq = q.to_vec();
    kernel_transform(&mut kq);
    let mut kp = p.to_vec();
    kernel_transform(&mut kp);
    let a: f64 = p.iter().zip(&kq).map(|(x, y)| x * y).sum();
    let b: f64 = q.iter().zip(&kp).map(|(x, y)| x * y).sum();
    scale * 0.5 * (a + b)
}

/// Within-setting U-statistic over ordered pairs of distinct shots.
pub fn purity_u_statistic(n: &[f64]) -> Result<f64> {
    let m: f64 = n.iter().sum();
    if m < 2.0 {
        return Err(Error::TooFewShots(m as u64));
    }
    let mut kn = n.to_vec();
    kernel_transform(&mut kn);
    let quad: f64 = n.iter().zip(&kn).map(|(x, y)| x * y).sum();
    // the diagonal kernel is 1, so same-shot pairs contribute exactly m
    Ok(n.len() as f64 * (quad - m) / (m * (m - 1.0)))
}

/// Estimate with its jackknife standard error and per-setting values.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub per_setting: Vec<f64>,
}

impl Estimate {
    fn from_settings(per_setting: Vec<f64>) -> Self {
        let n = per_setting.len() as f64;
        let total: f64 = per_setting.iter().sum();
        let value = total / n;
        let error = if per_setting.len() > 1 {
            jackknife_error(&leave_one_out(&per_setting, total))
        } else {
            0.0
        };
        Estimate {
            value,
            error,
            per_setting,
        }
    }
}

fn leave_one_out(xs: &[f64], total: f64) -> Vec<f64> {
    let n = xs.len() as f64;
    xs.iter().map(|x| (total - x) / (n - 1.0)).collect()
}

fn per_setting_overlap(a: &RandMeasDataset, b: &RandMeasDataset, subsystem: &[usize]) -> Result<Vec<f64>> {
    check_subsystem(a.n_qubits, subsystem)?;
    a.check_compatible(b, subsystem)?;
    let same = a == b;
    a.counts
        .iter()
        .zip(&b.counts)
        .map(|(ca, cb)| {
            let p = marginal_counts(ca, subsystem)?;
            if same {
                purity_u_statistic(&p)
            } else {
                let q = marginal_counts(cb, subsystem)?;
                let (na, nb) = (a.shots as f64, b.shots as f64);
                if na == 0.0 || nb == 0.0 {
                    return Err(Error::TooFewShots(0));
                }
                let p: Vec<f64> = p.iter().map(|x| x / na).collect();
                let q: Vec<f64> = q.iter().map(|x| x / nb).collect();
                Ok(cross_correlation(&p, &q))
            }
        })
        .collect()
}

/// `Tr(rho_a rho_b)` on `subsystem`. Identical datasets use the unbiased
/// purity estimator; distinct ones the product of empirical frequencies.
pub fn estimate_overlap(a: &RandMeasDataset, b: &RandMeasDataset, subsystem: &[usize]) -> Result<Estimate> {
    Ok(Estimate::from_settings(per_setting_overlap(a, b, subsystem)?))
}

/// `Tr(rho^2)` on `subsystem`.
pub fn estimate_purity(a: &RandMeasDataset, subsystem: &[usize]) -> Result<Estimate> {
    estimate_overlap(a, a, subsystem)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityEstimate {
    pub subsystem: Vec<usize>,
    pub overlap: f64,
    pub overlap_error: f64,
    pub purity_1: f64,
    pub purity_1_error: f64,
    pub purity_2: f64,
    pub purity_2_error: f64,
    pub fmax: f64,
    pub fmax_error: f64,
    /// False when either purity estimate is not positive.
    pub reliable: bool,
}

/// `Tr(rho_1 rho_2) / max(Tr rho_1^2, Tr rho_2^2)` with leave-one-setting-out
/// jackknife errors.
pub fn estimate_fmax(a: &RandMeasDataset, b: &RandMeasDataset, subsystem: &[usize]) -> Result<FidelityEstimate> {
    let o = per_setting_overlap(a, b, subsystem)?;
    let p1 = per_setting_overlap(a, a, subsystem)?;
    let p2 = per_setting_overlap(b, b, subsystem)?;
    let n = o.len();
    let (to, t1, t2): (f64, f64, f64) = (o.iter().sum(), p1.iter().sum(), p2.iter().sum());
    let nf = n as f64;
    let fmax = (to / nf) / (t1 / nf).max(t2 / nf);
    let fmax_error = if n > 1 {
        let reps: Vec<f64> = (0..n)
            .map(|i| {
                let d = nf - 1.0;
                ((to - o[i]) / d) / ((t1 - p1[i]) / d).max((t2 - p2[i]) / d)
            })
            .collect();
        jackknife_error(&reps)
    } else {
        0.0
    };
    let (eo, e1, e2) = (
        Estimate::from_settings(o),
        Estimate::from_settings(p1),
        Estimate::from_settings(p2),
    );
    Ok(FidelityEstimate {
        subsystem: subsystem.to_vec(),
        overlap: eo.value,
        overlap_error: eo.error,
        reliable: e1.value > 0.0 && e2.value > 0.0,
        purity_1: e1.value,
        purity_1_error: e1.error,
        purity_2: e2.value,
        purity_2_error: e2.error,
        fmax,
        fmax_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(hamming_kernel(&bs("00"), &bs("00")).unwrap(), 1.0);
        assert_eq!(hamming_kernel(&bs("01"), &bs("10")).unwrap(), 0.25);
        assert_eq!(hamming_kernel(&bs("0"), &bs("1")).unwrap(), -0.5);
        assert!(hamming_kernel(&bs("0"), &bs("10")).is_err());
    }

    #[test]
    fn kernel_row_sums() {
        for s in ["0", "1"] {
            let total: f64 = ["0", "1"].iter().map(|t| hamming_kernel(&bs(s), &bs(t)).unwrap()).sum();
            assert_eq!(total, 0.5);
        }
    }

    #[test]
    fn transform_matches_pairwise_kernel() {
        let v = [0.3, -1.0, 2.0, 0.5, 0.25, 0.0, 1.5, -0.75];
        let mut t = v.to_vec();
        kernel_transform(&mut t);
        for (i, ti) in t.iter().enumerate() {
            let direct: f64 = (0..8)
                .map(|j| {
                    let k = hamming_kernel(&Bitstring::new(3, i as u64).unwrap(), &Bitstring::new(3, j as u64).unwrap());
                    k.unwrap() * v[j]
                })
                .sum();
            assert!((ti - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn u_statistic_excludes_same_shot_pairs() {
        // two shots, both "0": the single distinct pair has kernel 1
        assert_eq!(purity_u_statistic(&[2.0, 0.0]).unwrap(), 2.0);
        // "0" and "1": kernel -1/2 for both ordered pairs
        assert_eq!(purity_u_statistic(&[1.0, 1.0]).unwrap(), -1.0);
        assert!(purity_u_statistic(&[1.0, 0.0]).is_err());
    }
}
