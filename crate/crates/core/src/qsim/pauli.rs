//! Pauli strings over a qubit register.
//!
//! Qubit `q` of an `n`-qubit register is bit `n - 1 - q` of the amplitude
//! index, so qubit 0 is the leftmost character of a bitstring.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' | 'i' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    /// `self * other = phase * result`
    pub fn product(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        match (self, other) {
            (I, p) | (p, I) => (one, p),
            (X, X) | (Y, Y) | (Z, Z) => (one, I),
            (X, Y) => (i, Z),
            (Y, X) => (-i, Z),
            (Y, Z) => (i, X),
            (Z, Y) => (-i, X),
            (Z, X) => (i, Y),
            (X, Z) => (-i, Y),
        }
    }
}

/// Parses `"XZI"`-style strings.
pub fn parse_paulis(s: &str) -> Result<Vec<Pauli>> {
    s.chars()
        .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidArgument(alloc::format!("bad Pauli label '{c}'"))))
        .collect()
}

/// A real multiple of a Pauli string.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: Vec<Pauli>) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidArgument("non-finite Pauli coefficient".into()));
        }
        Ok(PauliTerm {
            coefficient,
            factors,
        })
    }

    pub fn parse(coefficient: f64, s: &str) -> Result<Self> {
        Self::new(coefficient, parse_paulis(s)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|p| *p == Pauli::I)
    }

    pub fn is_xz(&self) -> bool {
        self.factors.iter().all(|p| *p != Pauli::Y)
    }

    pub fn support(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn label(&self) -> String {
        self.factors.iter().map(|p| p.as_char()).collect()
    }

    /// `(x_mask, z_mask, number of Y)` in amplitude-index bit order.
    pub(crate) fn masks(&self) -> (u64, u64, u32) {
        let n = self.factors.len();
        let mut x = 0u64;
        let mut z = 0u64;
        let mut ny = 0;
        for (q, p) in self.factors.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    /// `y += coefficient * P x`
    pub fn apply_add(&self, x: &[C64], y: &mut [C64]) {
        let (xm, zm, ny) = self.masks();
        let base = i_pow(ny) * self.coefficient;
        for (j, amp) in x.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let sign = if (j as u64 & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            y[j ^ xm as usize] += base * sign * amp;
        }
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+} {}", self.coefficient, self.label())
    }
}

pub(crate) fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Sum of Pauli strings with complex coefficients. Used to expand operators
/// written as products of local matrices into Pauli terms.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<Vec<Pauli>, C64>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        PauliSum {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut s = Self::zero(n);
        s.add_term(vec![Pauli::I; n], C64::new(1.0, 0.0));
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, factors: Vec<Pauli>, c: C64) {
        debug_assert_eq!(factors.len(), self.n);
        *self.terms.entry(factors).or_insert(C64::new(0.0, 0.0)) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Pauli>, &C64)> {
        self.terms.iter()
    }

    /// Expands a `2^k x 2^k` matrix acting on `qubits` (first listed qubit is
    /// the most significant local index) into Pauli strings on `n` qubits.
    pub fn from_local(n: usize, qubits: &[usize], m: &CMatrix) -> Result<Self> {
        let k = qubits.len();
        if m.nrows() != 1 << k || m.ncols() != 1 << k {
            return Err(Error::InvalidArgument("local matrix size does not match qubit count".into()));
        }
        for (a, &q) in qubits.iter().enumerate() {
            if q >= n {
                return Err(Error::IndexOutOfRange { what: "qubit", index: q, len: n });
            }
            if qubits[..a].contains(&q) {
                return Err(Error::RegisterCollision(q));
            }
        }
        let mut out = Self::zero(n);
        let norm = 1.0 / (1u64 << k) as f64;
        for code in 0..(1usize << (2 * k)) {
            let local: Vec<Pauli> = (0..k).map(|a| Pauli::ALL[(code >> (2 * (k - 1 - a))) & 3]).collect();
            // Tr(P M) = sum_{r,c} P[c][r] M[r][c]
            let mut tr = C64::new(0.0, 0.0);
            for r in 0..(1 << k) {
                for c in 0..(1 << k) {
                    let mut p = C64::new(1.0, 0.0);
                    for (a, pa) in local.iter().enumerate() {
                        let shift = k - 1 - a;
                        p *= pa.matrix()[(c >> shift) & 1][(r >> shift) & 1];
                    }
                    if p.norm_sqr() > 0.0 {
                        tr += p * m[(r, c)];
                    }
                }
            }
            let coef = tr * norm;
            if coef.norm() > 1e-15 {
                let mut full = vec![Pauli::I; n];
                for (a, &q) in qubits.iter().enumerate() {
                    full[q] = local[a];
                }
                out.add_term(full, coef);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        PauliSum {
            n: self.n,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn add(&self, other: &PauliSum) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), *v);
        }
        out
    }

    pub fn mul(&self, other: &PauliSum) -> Self {
        let mut out = Self::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut phase = ca * cb;
                let prod: Vec<Pauli> = a
                    .iter()
                    .zip(b)
                    .map(|(p, q)| {
                        let (ph, r) = p.product(*q);
                        phase *= ph;
                        r
                    })
                    .collect();
                out.add_term(prod, phase);
            }
        }
        out
    }

    /// Real Pauli terms of a Hermitian sum; coefficients below `tol` are
    /// dropped, imaginary parts above `tol` are an error.
    pub fn to_hermitian_terms(&self, tol: f64) -> Result<Vec<PauliTerm>> {
        let mut out = Vec::new();
        for (k, c) in &self.terms {
            if c.im.abs() > tol {
                return Err(Error::NotHermitian(c.im.abs()));
            }
            if c.re.abs() > tol {
                out.push(PauliTerm::new(c.re, k.clone())?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_table_is_consistent_with_matrices() {
        for p in Pauli::ALL {
            for q in Pauli::ALL {
                let (ph, r) = p.product(q);
                let (a, b, c) = (p.matrix(), q.matrix(), r.matrix());
                for i in 0..2 {
                    for j in 0..2 {
                        let ab = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                        assert!((ab - ph * c[i][j]).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn local_decomposition_of_cnot() {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let cnot = CMatrix::from_row_slice(4, 4, &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o]);
        let s = PauliSum::from_local(2, &[0, 1], &cnot).unwrap();
        let terms = s.to_hermitian_terms(1e-12).unwrap();
        let labels: Vec<(String, f64)> = terms.iter().map(|t| (t.label(), t.coefficient)).collect();
        assert_eq!(labels.len(), 4);
        assert!(labels.contains(&("II".into(), 0.5)));
        assert!(labels.contains(&("IX".into(), 0.5)));
        assert!(labels.contains(&("ZI".into(), 0.5)));
        assert!(labels.contains(&("ZX".into(), -0.5)));
    }

    #[test]
    fn y_action_on_basis_states() {
        let t = PauliTerm::parse(1.0, "Y").unwrap();
        let mut y = vec![C64::new(0.0, 0.0); 2];
        t.apply_add(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &mut y);
        assert_eq!(y[1], C64::new(0.0, 1.0));
        let mut y = vec![C64::new(0.0, 0.0); 2];
        t.apply_add(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], &mut y);
        assert_eq!(y[0], C64::new(0.0, -1.0));
    }
}
