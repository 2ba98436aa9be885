use alloc::vec::Vec;
use core::fmt;

use crate::qsim::fermion::{FermionOperator, FermionTerm, LatticeSpec, Spin};
use crate::C64;

/// What a basis element counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    /// `c†_i c_j + c†_j c_i` for one spin.
    Hopping { i: usize, j: usize, spin: Spin },
    /// `n_{site,up} n_{site,down}`
    Doublon { site: usize },
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::Hopping { i, j, spin } => write!(f, "hop({i},{j},{})", spin.symbol()),
            ElementKind::Doublon { site } => write!(f, "dbl({site})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisElement {
    pub kind: ElementKind,
    pub operator: FermionOperator,
}

/// Hermitian local operators `S_m` spanning the Hubbard family.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBasis {
    pub lattice: LatticeSpec,
    pub elements: Vec<BasisElement>,
}

/// One hopping element per bond and spin (bonds in lattice order, up before
/// down), then one doublon element per site.
pub fn build_operator_basis(lattice: &LatticeSpec) -> OperatorBasis {
    let mut elements = Vec::new();
    for (i, j) in lattice.bonds() {
        for spin in Spin::BOTH {
            elements.push(BasisElement {
                kind: ElementKind::Hopping { i, j, spin },
                operator: FermionOperator::new(FermionTerm::hopping(i, j, spin, C64::new(1.0, 0.0)).to_vec()),
            });
        }
    }
    for site in 0..lattice.sites() {
        elements.push(BasisElement {
            kind: ElementKind::Doublon { site },
            operator: FermionOperator::new(alloc::vec![FermionTerm::doublon(site)]),
        });
    }
    OperatorBasis {
        lattice: *lattice,
        elements,
    }
}

impl OperatorBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Coefficients of `-J sum hop + U sum doublon` in this basis.
    pub fn hubbard_coefficients(&self, j: f64, u: f64) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| match e.kind {
                ElementKind::Hopping { .. } => -j,
                ElementKind::Doublon { .. } => u,
            })
            .collect()
    }

    /// `sum_m c_m S_m`
    pub fn hamiltonian(&self, c: &[f64]) -> FermionOperator {
        let mut terms = Vec::new();
        for (e, &cm) in self.elements.iter().zip(c) {
            terms.extend(e.operator.scaled(C64::new(cm, 0.0)).terms);
        }
        FermionOperator::new(terms)
    }
}
