//! Expectation values, local rotations, partial traces and projective
//! sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution};

use crate::linalg::{hermitian_eigen, vdot, CMatrix, LinearOperator, DENSE_LIMIT};
use crate::qsim::operator::OperatorMatrix;
use crate::qsim::state::{Basis, Bitstring, Counts, QuantumState, StateData};
use crate::rng::{Rng, Seed};
use crate::{Error, Result, C64};

/// Single-qubit gate as `[[u00, u01], [u10, u11]]`.
pub type Mat2 = [[C64; 2]; 2];

/// Unitarity tolerance for [`apply_local_unitaries`].
pub const UNITARY_TOL: f64 = 1e-10;

/// `<psi|O|psi>` or `Tr(rho O)`.
pub fn expectation(state: &QuantumState, op: &OperatorMatrix) -> Result<C64> {
    state.basis().ensure_same(op.basis())?;
    Ok(match state.data() {
        StateData::Pure(a) => vdot(a, &op.apply(a)),
        StateData::Mixed(r) => {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..r.nrows() {
                for (j, v) in op.row(i) {
                    acc += v * r[(j, i)];
                }
            }
            acc
        }
    })
}

/// Largest entry of `|U U† - I|`.
pub fn unitarity_defect(u: &Mat2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in u[i].iter().zip(&u[j]) {
                acc += a * b.conj();
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// Applies `u` to bit `shift` of every index of `v` (stride access).
fn apply_bit(v: &mut [C64], stride: usize, offset: usize, shift: usize, u: &Mat2) {
    let mask = 1usize << shift;
    let n = v.len() / stride;
    for i in 0..n {
        if i & mask == 0 {
            let a = v[offset + i * stride];
            let b = v[offset + (i | mask) * stride];
            v[offset + i * stride] = u[0][0] * a + u[0][1] * b;
            v[offset + (i | mask) * stride] = u[1][0] * a + u[1][1] * b;
        }
    }
}

/// `(U_0 ⊗ U_1 ⊗ ... ⊗ U_{n-1}) rho (...)†`, one gate per qubit.
pub fn apply_local_unitaries(state: &QuantumState, gates: &[Mat2]) -> Result<QuantumState> {
    let n = state
        .basis()
        .n_qubits()
        .ok_or_else(|| Error::BasisMismatch("local unitaries need a qubit register".into()))?;
    if gates.len() != n {
        return Err(Error::LengthMismatch(gates.len(), n));
    }
    for (q, g) in gates.iter().enumerate() {
        let dev = unitarity_defect(g);
        if dev.is_nan() || dev > UNITARY_TOL {
            return Err(Error::NonUnitary { qubit: q, deviation: dev });
        }
    }
    let data = match state.data() {
        StateData::Pure(a) => {
            let mut v = a.clone();
            for (q, g) in gates.iter().enumerate() {
                apply_bit(&mut v, 1, 0, n - 1 - q, g);
            }
            StateData::Pure(v)
        }
        StateData::Mixed(r) => {
            let d = r.nrows();
            // column-major storage: entry (i, j) sits at i + j * d
            let mut m: Vec<C64> = r.as_slice().to_vec();
            for (q, g) in gates.iter().enumerate() {
                let conj = [[g[0][0].conj(), g[0][1].conj()], [g[1][0].conj(), g[1][1].conj()]];
                for col in 0..d {
                    apply_bit(&mut m[col * d..(col + 1) * d], 1, 0, n - 1 - q, g);
                }
                for row in 0..d {
                    apply_bit(&mut m, d, row, n - 1 - q, &conj);
                }
            }
            StateData::Mixed(CMatrix::from_column_slice(d, d, &m))
        }
    };
    Ok(QuantumState::from_parts(state.basis().clone(), data))
}

/// Multinomial counts of `shots` draws over `probs`, via sequential
/// conditional binomials.
pub fn multinomial(rng: &mut Rng, shots: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let last = probs.iter().rposition(|&p| p > 0.0);
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if Some(k) == last {
            out[k] = remaining;
            break;
        }
        if p == 0.0 {
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let x = Binomial::new(remaining, q).map(|b| b.sample(rng)).unwrap_or(0);
        out[k] = x;
        remaining -= x;
        mass -= p;
        if mass <= 0.0 {
            break;
        }
    }
    out
}

/// Computational-basis measurement repeated `shots` times.
pub fn sample_bitstrings(state: &QuantumState, shots: u64, seed: Seed) -> Result<Counts> {
    let n = state
        .basis()
        .n_qubits()
        .ok_or_else(|| Error::BasisMismatch("bitstring sampling needs a qubit register".into()))?;
    let mut out = Counts::new();
    if shots == 0 {
        return Ok(out);
    }
    let probs = state.probabilities();
    let counts = multinomial(&mut seed.rng(), shots, &probs);
    for (i, c) in counts.into_iter().enumerate() {
        if c > 0 {
            out.insert(Bitstring::new(n, i as u64)?, c);
        }
    }
    Ok(out)
}

/// Partial trace onto `subsystem`; the first listed qubit becomes qubit 0
/// of the result.
pub fn reduced_density(state: &QuantumState, subsystem: &[usize]) -> Result<QuantumState> {
    let n = state
        .basis()
        .n_qubits()
        .ok_or_else(|| Error::BasisMismatch("partial trace needs a qubit register".into()))?;
    for (a, &q) in subsystem.iter().enumerate() {
        if q >= n {
            return Err(Error::IndexOutOfRange { what: "qubit", index: q, len: n });
        }
        if subsystem[..a].contains(&q) {
            return Err(Error::RegisterCollision(q));
        }
    }
    let k = subsystem.len();
    let da = 1usize << k;
    if da > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge { dim: da, limit: DENSE_LIMIT });
    }
    let env: Vec<usize> = (0..n).filter(|q| !subsystem.contains(q)).collect();
    let de = 1usize << env.len();
    // full index from (subsystem index, environment index)
    let compose = |a: usize, e: usize| -> usize {
        let mut idx = 0usize;
        for (p, &q) in subsystem.iter().enumerate() {
            idx |= ((a >> (k - 1 - p)) & 1) << (n - 1 - q);
        }
        for (p, &q) in env.iter().enumerate() {
            idx |= ((e >> (env.len() - 1 - p)) & 1) << (n - 1 - q);
        }
        idx
    };
    let mut rho = CMatrix::zeros(da, da);
    match state.data() {
        StateData::Pure(psi) => {
            let m = CMatrix::from_fn(da, de, |a, e| psi[compose(a, e)]);
            rho = &m * m.adjoint();
        }
        StateData::Mixed(r) => {
            for e in 0..de {
                for a in 0..da {
                    let i = compose(a, e);
                    for b in 0..da {
                        rho[(a, b)] += r[(i, compose(b, e))];
                    }
                }
            }
        }
    }
    Ok(QuantumState::from_parts(Basis::Qubits(k), StateData::Mixed(rho)))
}

/// Born distribution of an observable's eigenvalues in a state.
#[derive(Clone, Debug, PartialEq)]
pub struct BornDistribution {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl BornDistribution {
    pub fn new(state: &QuantumState, op: &OperatorMatrix) -> Result<Self> {
        state.basis().ensure_same(op.basis())?;
        if !op.is_hermitian() {
            return Err(Error::NotHermitian(op.hermiticity_defect()));
        }
        let eig = hermitian_eigen(&op.to_dense()?);
        let d = op.dim();
        let probabilities = match state.data() {
            StateData::Pure(a) => (0..d)
                .map(|k| {
                    let col: Vec<C64> = eig.vectors.column(k).iter().copied().collect();
                    vdot(&col, a).norm_sqr()
                })
                .collect(),
            StateData::Mixed(r) => (0..d)
                .map(|k| {
                    let v = eig.vectors.column(k);
                    let rv = r * v;
                    v.iter().zip(rv.iter()).map(|(x, y)| x.conj() * y).sum::<C64>().re.max(0.0)
                })
                .collect(),
        };
        Ok(BornDistribution {
            values: eig.values,
            probabilities,
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probabilities).map(|(v, p)| v * p).sum()
    }

    /// `(sample mean, unbiased sample variance)` of `shots` draws.
    pub fn sample(&self, shots: u64, rng: &mut Rng) -> Result<(f64, f64)> {
        if shots == 0 {
            return Err(Error::TooFewShots(0));
        }
        let counts = multinomial(rng, shots, &self.probabilities);
        let n = shots as f64;
        let mean = counts.iter().zip(&self.values).map(|(&c, v)| c as f64 * v).sum::<f64>() / n;
        let var = if shots > 1 {
            counts
                .iter()
                .zip(&self.values)
                .map(|(&c, v)| c as f64 * (v - mean) * (v - mean))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        Ok((mean, var))
    }
}

/// Projective measurement of a Hermitian observable repeated `shots`
/// times; returns the sample mean and unbiased sample variance.
pub fn sample_observable(state: &QuantumState, op: &OperatorMatrix, shots: u64, seed: Seed) -> Result<(f64, f64)> {
    BornDistribution::new(state, op)?.sample(shots, &mut seed.rng())
}

/// One uniformly distributed draw from `[0, 1)`, used by callers that hold
/// a generator.
pub fn uniform(rng: &mut Rng) -> f64 {
    rng.random::<f64>()
}
