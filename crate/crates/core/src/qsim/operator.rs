//! Sparse operators assembled from symbolic terms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{CMatrix, LinearOperator};
use crate::qsim::fermion::FermionTerm;
use crate::qsim::pauli::{i_pow, PauliTerm};
use crate::qsim::state::Basis;
use crate::{Error, Result, C64};

/// A symbolic term in either representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Fermion(FermionTerm),
    Pauli(PauliTerm),
}

impl From<FermionTerm> for Term {
    fn from(t: FermionTerm) -> Self {
        Term::Fermion(t)
    }
}

impl From<PauliTerm> for Term {
    fn from(t: PauliTerm) -> Self {
        Term::Pauli(t)
    }
}

/// Compressed-row complex matrix tied to a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    basis: Basis,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<C64>,
    hermitian: bool,
}

/// Relative tolerance of the Hermiticity flag.
pub const HERMITIAN_TOL: f64 = 1e-10;

impl OperatorMatrix {
    fn from_rows(basis: Basis, row_ptr: Vec<usize>, cols: Vec<u32>, values: Vec<C64>) -> Self {
        let mut m = OperatorMatrix {
            basis,
            row_ptr,
            cols,
            values,
            hermitian: false,
        };
        m.hermitian = m.hermiticity_defect() <= HERMITIAN_TOL * m.norm_bound().max(1.0);
        m
    }

    /// Sparse copy of a dense matrix; entries with modulus `<= drop` are
    /// omitted.
    pub fn from_dense(basis: Basis, m: &CMatrix, drop: f64) -> Result<Self> {
        let d = basis.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::LengthMismatch(m.nrows(), d));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if m[(i, j)].norm() > drop {
                    cols.push(j as u32);
                    values.push(m[(i, j)]);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self::from_rows(basis, row_ptr, cols, values))
    }

    /// Diagonal operator.
    pub fn diagonal(basis: Basis, diag: &[f64]) -> Result<Self> {
        if diag.len() != basis.dim() {
            return Err(Error::LengthMismatch(diag.len(), basis.dim()));
        }
        let row_ptr = (0..=diag.len()).collect();
        let cols = (0..diag.len() as u32).collect();
        let values = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Ok(Self::from_rows(basis, row_ptr, cols, values))
    }

    pub fn identity(basis: Basis) -> Self {
        let d = basis.dim();
        Self::from_rows(
            basis,
            (0..=d).collect(),
            (0..d as u32).collect(),
            vec![C64::new(1.0, 0.0); d],
        )
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether the matrix equals its adjoint within [`HERMITIAN_TOL`]
    /// relative to [`norm_bound`](Self::norm_bound).
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[r.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm of a
    /// Hermitian matrix.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A_ij - conj(A_ji)|`
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim();
        let mut counts = vec![0usize; d + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..d {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0u32; self.nnz()];
        let mut values = vec![C64::new(0.0, 0.0); self.nnz()];
        for i in 0..d {
            for (j, v) in self.row(i) {
                let k = next[j];
                cols[k] = i as u32;
                values[k] = v.conj();
                next[j] += 1;
            }
        }
        OperatorMatrix {
            basis: self.basis.clone(),
            row_ptr,
            cols,
            values,
            hermitian: self.hermitian,
        }
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        let d = self.dim();
        if d > crate::linalg::DENSE_LIMIT {
            return Err(Error::DimensionTooLarge {
                dim: d,
                limit: crate::linalg::DENSE_LIMIT,
            });
        }
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        Ok(m)
    }
}

impl LinearOperator for OperatorMatrix {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }
}

/// Sums `terms` into a sparse matrix over `basis`.
///
/// Fermion terms require a fermion sector and Pauli terms a qubit register
/// of matching width.
pub fn assemble_operator(terms: &[Term], basis: &Basis) -> Result<OperatorMatrix> {
    let d = basis.dim();
    if d > u32::MAX as usize {
        return Err(Error::DimensionTooLarge {
            dim: d,
            limit: u32::MAX as usize,
        });
    }
    let mut fermion = Vec::new();
    let mut pauli = Vec::new();
    for t in terms {
        match (t, basis) {
            (Term::Fermion(f), Basis::Fermion(s)) => {
                if let Some(site) = f.max_site() {
                    if site >= s.lattice().sites() {
                        return Err(Error::IndexOutOfRange {
                            what: "site",
                            index: site,
                            len: s.lattice().sites(),
                        });
                    }
                }
                // rows are built from the adjoint action on each row state
                fermion.push((f.adjoint(), f.coefficient));
            }
            (Term::Pauli(p), Basis::Qubits(n)) => {
                if p.n_qubits() != *n {
                    return Err(Error::BasisMismatch(format!(
                        "{}-qubit term on a {n}-qubit register",
                        p.n_qubits()
                    )));
                }
                let (xm, zm, ny) = p.masks();
                pauli.push((xm as usize, zm as usize, i_pow(ny) * p.coefficient));
            }
            (Term::Fermion(_), b) => return Err(Error::BasisMismatch(format!("fermion term on {b}"))),
            (Term::Pauli(_), b) => return Err(Error::BasisMismatch(format!("Pauli term on {b}"))),
        }
    }
    let mut row_ptr = Vec::with_capacity(d + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    let mut scratch: Vec<(usize, C64)> = Vec::new();
    for i in 0..d {
        scratch.clear();
        if let Basis::Fermion(s) = basis {
            let (u, dn) = s.config(i);
            for (adj, coef) in &fermion {
                if let Some((sign, u2, d2)) = adj.act(u, dn) {
                    if let Some(j) = s.index(u2, d2) {
                        scratch.push((j, coef * sign));
                    }
                }
            }
        }
        for &(xm, zm, base) in &pauli {
            let j = i ^ xm;
            let sign = if (j & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            scratch.push((j, base * sign));
        }
        scratch.sort_unstable_by_key(|e| e.0);
        let mut k = 0;
        while k < scratch.len() {
            let j = scratch[k].0;
            let mut v = C64::new(0.0, 0.0);
            while k < scratch.len() && scratch[k].0 == j {
                v += scratch[k].1;
                k += 1;
            }
            if v.re != 0.0 || v.im != 0.0 {
                cols.push(j as u32);
                values.push(v);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(OperatorMatrix::from_rows(basis.clone(), row_ptr, cols, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::fermion::{build_fermion_basis, Ladder, LatticeSpec, Spin};
    use crate::qsim::pauli::Pauli;

    fn sector(r: usize, c: usize, u: usize, d: usize) -> Basis {
        Basis::fermion(build_fermion_basis(&LatticeSpec::new(r, c, u, d).unwrap()).unwrap())
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn number_operator_on_two_sites() {
        let b = sector(1, 2, 1, 0);
        let m = assemble_operator(&[FermionTerm::number(0, Spin::Up).into()], &b).unwrap();
        let d = m.to_dense().unwrap();
        assert_eq!(d[(0, 0)], one());
        assert_eq!(d[(1, 1)], C64::new(0.0, 0.0));
        assert!(m.is_hermitian());
    }

    #[test]
    fn hopping_on_two_sites() {
        let b = sector(1, 2, 1, 0);
        let terms: Vec<Term> = FermionTerm::hopping(0, 1, Spin::Up, one()).into_iter().map(Term::from).collect();
        let d = assemble_operator(&terms, &b).unwrap().to_dense().unwrap();
        assert_eq!(d[(0, 1)], one());
        assert_eq!(d[(1, 0)], one());
        assert_eq!(d[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn out_of_range_site_rejected() {
        let b = sector(1, 2, 1, 0);
        let r = assemble_operator(&[FermionTerm::number(2, Spin::Up).into()], &b);
        assert!(matches!(r, Err(Error::IndexOutOfRange { .. })));
        let p = PauliTerm::parse(1.0, "XZ").unwrap();
        assert!(assemble_operator(&[p.into()], &b).is_err());
    }

    #[test]
    fn pauli_assembly_matches_apply() {
        let p = PauliTerm::new(0.7, vec![Pauli::Y, Pauli::Z, Pauli::X]).unwrap();
        let m = assemble_operator(&[p.clone().into()], &Basis::Qubits(3)).unwrap();
        for j in 0..8 {
            let mut e = vec![C64::new(0.0, 0.0); 8];
            e[j] = one();
            let mut y = vec![C64::new(0.0, 0.0); 8];
            p.apply_add(&e, &mut y);
            let z = m.apply(&e);
            for k in 0..8 {
                assert!((y[k] - z[k]).norm() < 1e-15);
            }
        }
        assert!(m.is_hermitian());
    }

    #[test]
    fn adjoint_transposes() {
        let b = sector(2, 2, 1, 1);
        let t = FermionTerm::new(C64::new(0.3, 0.8), vec![Ladder::create(0, Spin::Up), Ladder::annihilate(3, Spin::Up)]);
        let m = assemble_operator(&[t.clone().into()], &b).unwrap();
        let ma = assemble_operator(&[t.adjoint().into()], &b).unwrap();
        assert!(!m.is_hermitian());
        assert_eq!(m.adjoint().to_dense().unwrap(), ma.to_dense().unwrap());
    }
}
