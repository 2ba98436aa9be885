use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;

use crate::hamlearn::basis::OperatorBasis;
use crate::hamlearn::kmatrix::KContext;
use crate::qsim::fermion::{FermionOperator, FermionTerm, Ladder, LatticeSpec, Spin};
use crate::qsim::state::QuantumState;
use crate::{Error, Result, C64};

/// Relative Gram-Schmidt residual below which a row counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-8;

/// Rows with a smaller norm carry no information.
pub const ZERO_ROW_TOL: f64 = 1e-10;

/// `(i, j, k, sigma, sigma')` of `i (c†_{i sigma} c_{j sigma} - h.c.) n_{k sigma'}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConstraintLabel {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub sigma: Spin,
    pub sigma_prime: Spin,
}

impl fmt::Display for ConstraintLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "A({},{},{};{}{})",
            self.i,
            self.j,
            self.k,
            self.sigma.symbol(),
            self.sigma_prime.symbol()
        )
    }
}

impl ConstraintLabel {
    /// `i(X - X†)` with `X = c†_{i sigma} c_{j sigma} n_{k sigma'}`. The
    /// density factor multiplies the hop on the right, so for `k` in `{i, j}`
    /// the bracket still yields a Hermitian operator.
    pub fn operator(&self) -> FermionOperator {
        let x = FermionTerm::new(
            C64::new(0.0, 1.0),
            vec![
                Ladder::create(self.i, self.sigma),
                Ladder::annihilate(self.j, self.sigma),
                Ladder::create(self.k, self.sigma_prime),
                Ladder::annihilate(self.k, self.sigma_prime),
            ],
        );
        let xd = x.adjoint();
        FermionOperator::new(vec![x, xd])
    }

    /// `c†_i c_j n_i` vanishes for equal spins.
    pub fn is_identically_zero(&self) -> bool {
        self.k == self.i && self.sigma == self.sigma_prime
    }
}

/// Candidates in enumeration order: bonds in lattice order; for each bond
/// the sites `k` of `{i, j}` and their neighbours ascending; then `sigma`,
/// then `sigma'`, up before down. Identically vanishing operators are
/// skipped.
pub fn candidate_constraints(lattice: &LatticeSpec) -> Vec<ConstraintLabel> {
    let mut out = Vec::new();
    for (i, j) in lattice.bonds() {
        let mut ks: BTreeSet<usize> = [i, j].into_iter().collect();
        ks.extend(lattice.neighbors(i));
        ks.extend(lattice.neighbors(j));
        for &k in &ks {
            for sigma in Spin::BOTH {
                for sigma_prime in Spin::BOTH {
                    let l = ConstraintLabel {
                        i,
                        j,
                        k,
                        sigma,
                        sigma_prime,
                    };
                    if !l.is_identically_zero() {
                        out.push(l);
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub label: ConstraintLabel,
    pub operator: FermionOperator,
    /// Set when the row was admitted after the independent pool ran out.
    pub dependent: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Number of rows selected as independent.
    pub fn independent(&self) -> usize {
        self.constraints.iter().filter(|c| !c.dependent).count()
    }

    pub fn prefix(&self, n: usize) -> ConstraintSet {
        ConstraintSet {
            constraints: self.constraints[..n.min(self.len())].to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    /// Keep candidates whose exact K-row is independent of the rows kept so
    /// far; once the candidates are exhausted, top up with the earliest
    /// dependent non-zero rows, flagged `dependent`.
    #[default]
    GreedyRank,
    /// First `N_C` candidates with a non-zero row, no rank filtering.
    Enumerated,
}

/// Selects `n_c` constraints for `state` by the given policy.
pub fn build_constraints(
    state: &QuantumState,
    basis: &OperatorBasis,
    n_c: usize,
    selection: Selection,
) -> Result<ConstraintSet> {
    if n_c == 0 {
        return Ok(ConstraintSet::default());
    }
    let ctx = KContext::new(state, basis)?;
    select_constraints(&ctx, n_c, selection)
}

pub fn select_constraints(ctx: &KContext<'_>, n_c: usize, selection: Selection) -> Result<ConstraintSet> {
    let mut kept: Vec<Constraint> = Vec::new();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut spare: Vec<Constraint> = Vec::new();
    let mut nonzero = 0;
    for label in candidate_constraints(ctx.lattice()) {
        if kept.len() == n_c {
            break;
        }
        let operator = label.operator();
        let row = ctx.row(&operator)?;
        let rn = sqrt(row.iter().map(|x| x * x).sum());
        if rn < ZERO_ROW_TOL {
            continue;
        }
        nonzero += 1;
        let c = Constraint {
            label,
            operator,
            dependent: false,
        };
        if selection == Selection::Enumerated {
            kept.push(c);
            continue;
        }
        let mut r = row;
        for _ in 0..2 {
            for q in &ortho {
                let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (x, y) in r.iter_mut().zip(q) {
                    *x -= d * y;
                }
            }
        }
        let res = sqrt(r.iter().map(|x| x * x).sum());
        if res / rn < DEPENDENCE_TOL {
            if spare.len() < n_c {
                spare.push(c);
            }
            continue;
        }
        r.iter_mut().for_each(|x| *x /= res);
        ortho.push(r);
        kept.push(c);
    }
    for mut c in spare {
        if kept.len() == n_c {
            break;
        }
        c.dependent = true;
        kept.push(c);
    }
    if kept.len() < n_c {
        return Err(Error::ConstraintPoolExhausted {
            requested: n_c,
            found: nonzero,
        });
    }
    Ok(ConstraintSet { constraints: kept })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_candidates() {
        let lat = LatticeSpec::new(1, 2, 1, 1).unwrap();
        let c = candidate_constraints(&lat);
        // k in {0, 1}, four spin pairs each, minus the two vanishing ones
        assert_eq!(c.len(), 6);
        assert!(c.iter().all(|l| l.k == l.i || l.k == l.j));
    }

    #[test]
    fn constraint_operators_are_hermitian() {
        let l = ConstraintLabel {
            i: 0,
            j: 1,
            k: 1,
            sigma: Spin::Up,
            sigma_prime: Spin::Up,
        };
        let a = l.operator();
        assert_eq!(a.adjoint().terms[0], a.terms[1]);
    }
}
