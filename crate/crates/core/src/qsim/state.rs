//! Pure and mixed states over a qubit register or a fermion sector.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::sqrt;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eigen, normalize, random_unit_vector, CMatrix, DENSE_LIMIT};
use crate::qsim::fermion::{FermionSector, LatticeSpec};
use crate::rng::Seed;
use crate::{Error, Result, C64};

/// Largest qubit register.
pub const MAX_QUBITS: usize = 24;

/// Hilbert space a state or operator lives in.
#[derive(Clone, Debug)]
pub enum Basis {
    Qubits(usize),
    Fermion(Arc<FermionSector>),
    /// Unlabelled space of the given dimension.
    Generic(usize),
}

impl Basis {
    pub fn qubits(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::DimensionTooLarge {
                dim: 1usize << n.min(63),
                limit: 1usize << MAX_QUBITS,
            });
        }
        Ok(Basis::Qubits(n))
    }

    pub fn fermion(sector: FermionSector) -> Self {
        Basis::Fermion(Arc::new(sector))
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Qubits(n) => 1usize << n,
            Basis::Fermion(s) => s.dim(),
            Basis::Generic(d) => *d,
        }
    }

    pub fn n_qubits(&self) -> Option<usize> {
        match self {
            Basis::Qubits(n) => Some(*n),
            _ => None,
        }
    }

    pub fn sector(&self) -> Option<&FermionSector> {
        match self {
            Basis::Fermion(s) => Some(s),
            _ => None,
        }
    }

    pub fn lattice(&self) -> Option<&LatticeSpec> {
        self.sector().map(|s| s.lattice())
    }

    pub fn ensure_same(&self, other: &Basis) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch(format!("{self} vs {other}")))
        }
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Basis::Qubits(a), Basis::Qubits(b)) => a == b,
            (Basis::Fermion(a), Basis::Fermion(b)) => a.lattice() == b.lattice(),
            (Basis::Generic(a), Basis::Generic(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Qubits(n) => write!(f, "qubits({n})"),
            Basis::Fermion(s) => {
                let l = s.lattice();
                write!(f, "fermions({}x{}, {}, {})", l.rows, l.cols, l.n_up, l.n_down)
            }
            Basis::Generic(d) => write!(f, "generic({d})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateData {
    Pure(Vec<C64>),
    Mixed(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    basis: Basis,
    data: StateData,
}

const PURE_TOL: f64 = 1e-10;
const MIXED_TOL: f64 = 1e-8;

impl QuantumState {
    /// Pure state from amplitudes; the norm must be 1 within `1e-10`.
    pub fn pure(basis: Basis, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::LengthMismatch(amplitudes.len(), basis.dim()));
        }
        let n2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !n2.is_finite() || (sqrt(n2) - 1.0).abs() > PURE_TOL {
            return Err(Error::InvalidState(format!("norm {} is not 1", sqrt(n2))));
        }
        Ok(QuantumState {
            basis,
            data: StateData::Pure(amplitudes),
        })
    }

    /// Pure state from unnormalized amplitudes.
    pub fn pure_normalized(basis: Basis, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::LengthMismatch(amplitudes.len(), basis.dim()));
        }
        if normalize(&mut amplitudes) == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(QuantumState {
            basis,
            data: StateData::Pure(amplitudes),
        })
    }

    /// Density matrix; must be Hermitian, unit trace and positive
    /// semidefinite within `1e-8`.
    pub fn mixed(basis: Basis, rho: CMatrix) -> Result<Self> {
        let d = basis.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::LengthMismatch(rho.nrows(), d));
        }
        if d > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge { dim: d, limit: DENSE_LIMIT });
        }
        let mut herm = 0.0f64;
        for i in 0..d {
            for j in 0..=i {
                herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
            }
        }
        if herm > MIXED_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > MIXED_TOL || tr.im.abs() > MIXED_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let low = hermitian_eigen(&rho).values.first().copied().unwrap_or(0.0);
        if low < -MIXED_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {low}")));
        }
        Ok(QuantumState {
            basis,
            data: StateData::Mixed(rho),
        })
    }

    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        let d = basis.dim();
        if index >= d {
            return Err(Error::IndexOutOfRange {
                what: "basis state",
                index,
                len: d,
            });
        }
        let mut a = vec![C64::new(0.0, 0.0); d];
        a[index] = C64::new(1.0, 0.0);
        Self::pure(basis, a)
    }

    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis_state(Basis::qubits(n)?, 0)
    }

    /// `(|0...0> + |1...1>)/sqrt(2)`
    pub fn ghz(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("GHZ needs at least one qubit".into()));
        }
        let basis = Basis::qubits(n)?;
        let mut a = vec![C64::new(0.0, 0.0); basis.dim()];
        let h = core::f64::consts::FRAC_1_SQRT_2;
        a[0] = C64::new(h, 0.0);
        a[basis.dim() - 1] = C64::new(h, 0.0);
        Self::pure(basis, a)
    }

    /// Tensor product of single-qubit states `a|0> + b|1>`; qubit 0 first.
    pub fn product(qubits: &[[C64; 2]]) -> Result<Self> {
        let n = qubits.len();
        let basis = Basis::qubits(n)?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for q in qubits {
            let nq = sqrt(q[0].norm_sqr() + q[1].norm_sqr());
            if nq == 0.0 {
                return Err(Error::ZeroVector);
            }
            amps = amps
                .iter()
                .flat_map(|a| [a * q[0] / nq, a * q[1] / nq])
                .collect();
        }
        Self::pure(basis, amps)
    }

    /// Haar-random pure state.
    pub fn random_pure(basis: Basis, seed: Seed) -> Self {
        let a = random_unit_vector(basis.dim(), seed);
        QuantumState {
            basis,
            data: StateData::Pure(a),
        }
    }

    /// Random mixed state `G G† / Tr(G G†)` with `G` a `dim x rank`
    /// complex Gaussian matrix.
    pub fn random_mixed(basis: Basis, rank: usize, seed: Seed) -> Result<Self> {
        let d = basis.dim();
        if d > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge { dim: d, limit: DENSE_LIMIT });
        }
        let rank = rank.max(1);
        let mut rng = seed.rng();
        let g = CMatrix::from_fn(d, rank, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let mut rho = &g * g.adjoint();
        let tr = rho.trace().re;
        rho /= C64::new(tr, 0.0);
        Ok(QuantumState {
            basis,
            data: StateData::Mixed(rho),
        })
    }

    pub fn maximally_mixed(basis: Basis) -> Result<Self> {
        let d = basis.dim();
        if d > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge { dim: d, limit: DENSE_LIMIT });
        }
        let rho = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
        Ok(QuantumState {
            basis,
            data: StateData::Mixed(rho),
        })
    }

    pub(crate) fn from_parts(basis: Basis, data: StateData) -> Self {
        QuantumState { basis, data }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match &self.data {
            StateData::Pure(a) => Some(a),
            StateData::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(a) => {
                let d = a.len();
                CMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj())
            }
            StateData::Mixed(r) => r.clone(),
        }
    }

    /// Diagonal of the density matrix.
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.data {
            StateData::Pure(a) => a.iter().map(|z| z.norm_sqr()).collect(),
            StateData::Mixed(r) => (0..r.nrows()).map(|i| r[(i, i)].re.max(0.0)).collect(),
        }
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 1.0,
            StateData::Mixed(r) => r.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// `Tr(rho sigma)`
    pub fn overlap(&self, other: &QuantumState) -> Result<f64> {
        self.basis.ensure_same(&other.basis)?;
        Ok(match (&self.data, &other.data) {
            (StateData::Pure(a), StateData::Pure(b)) => crate::linalg::vdot(a, b).norm_sqr(),
            (StateData::Pure(a), StateData::Mixed(r)) | (StateData::Mixed(r), StateData::Pure(a)) => {
                let d = a.len();
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        acc += a[i].conj() * r[(i, j)] * a[j];
                    }
                }
                acc.re
            }
            (StateData::Mixed(r), StateData::Mixed(s)) => {
                // Tr(r s) = sum_ij r_ij s_ji
                let d = r.nrows();
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        acc += r[(i, j)] * s[(j, i)];
                    }
                }
                acc.re
            }
        })
    }

    /// Weighted pure components `(p_k, psi_k)`: the state itself when pure,
    /// the eigen-ensemble with `p_k > 0` when mixed.
    pub fn ensemble(&self) -> Vec<(f64, Vec<C64>)> {
        match &self.data {
            StateData::Pure(a) => vec![(1.0, a.clone())],
            StateData::Mixed(r) => {
                let eig = hermitian_eigen(r);
                let cutoff = 1e-14;
                eig.values
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > cutoff)
                    .map(|(k, &p)| (p, eig.vectors.column(k).iter().copied().collect()))
                    .collect()
            }
        }
    }
}

/// Measurement outcome on `len` qubits; qubit 0 is the leftmost character
/// and the most significant bit of `bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bitstring {
    len: u8,
    bits: u64,
}

impl Bitstring {
    pub fn new(len: usize, bits: u64) -> Result<Self> {
        if len > 64 || (len < 64 && bits >> len != 0) {
            return Err(Error::InvalidArgument(format!("{bits:#x} does not fit in {len} bits")));
        }
        Ok(Bitstring { len: len as u8, bits })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Amplitude index of the outcome.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn bit(&self, qubit: usize) -> bool {
        (self.bits >> (self.len as usize - 1 - qubit)) & 1 == 1
    }

    pub fn hamming(&self, other: &Bitstring) -> Result<u32> {
        if self.len != other.len {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok((self.bits ^ other.bits).count_ones())
    }

    /// Restriction to `qubits`, in the given order.
    pub fn marginal(&self, qubits: &[usize]) -> Result<Bitstring> {
        let mut b = 0u64;
        for &q in qubits {
            if q >= self.len() {
                return Err(Error::IndexOutOfRange {
                    what: "qubit",
                    index: q,
                    len: self.len(),
                });
            }
            b = (b << 1) | self.bit(q) as u64;
        }
        Bitstring::new(qubits.len(), b)
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.len() {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 64 {
            return Err(Error::InvalidArgument(format!("bitstring of length {} exceeds 64", s.len())));
        }
        let mut b = 0u64;
        for c in s.chars() {
            b = (b << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::InvalidArgument(format!("invalid bitstring {s:?}"))),
                };
        }
        Bitstring::new(s.len(), b)
    }
}

impl From<Bitstring> for String {
    fn from(b: Bitstring) -> String {
        format!("{b}")
    }
}

/// Outcome histogram, sorted by bitstring.
pub type Counts = alloc::collections::BTreeMap<Bitstring, u64>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_orientation() {
        let b: Bitstring = "100".parse().unwrap();
        assert_eq!(b.bits(), 4);
        assert!(b.bit(0) && !b.bit(2));
        assert_eq!(b.to_string(), "100");
        assert_eq!(b.marginal(&[2, 0]).unwrap().to_string(), "01");
        let c: Bitstring = "011".parse().unwrap();
        assert_eq!(b.hamming(&c).unwrap(), 3);
        assert!(c < b);
        assert!("01a".parse::<Bitstring>().is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(QuantumState::pure(Basis::Qubits(1), vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        let g = QuantumState::ghz(3).unwrap();
        assert!((g.probabilities()[7] - 0.5).abs() < 1e-15);
        let bad = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        assert!(QuantumState::mixed(Basis::Qubits(1), bad).is_err());
        let r = QuantumState::random_mixed(Basis::Qubits(2), 2, Seed(3)).unwrap();
        assert!(QuantumState::mixed(Basis::Qubits(2), r.density()).is_ok());
        assert!(r.purity() < 1.0);
    }

    #[test]
    fn overlaps_agree_across_representations() {
        let a = QuantumState::random_pure(Basis::Qubits(2), Seed(1));
        let b = QuantumState::random_pure(Basis::Qubits(2), Seed(2));
        let bm = QuantumState::mixed(Basis::Qubits(2), b.density()).unwrap();
        let am = QuantumState::mixed(Basis::Qubits(2), a.density()).unwrap();
        let x = a.overlap(&b).unwrap();
        assert!((x - a.overlap(&bm).unwrap()).abs() < 1e-12);
        assert!((x - am.overlap(&bm).unwrap()).abs() < 1e-12);
    }
}
