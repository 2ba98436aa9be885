//! Spinful fermions on an open rectangular lattice, simulated directly in a
//! sector of fixed `(N_up, N_down)`.
//!
//! Conventions:
//! * sites are numbered row-major, `site = row * cols + col`;
//! * fermionic modes are ordered site-major with spin up before spin down,
//!   `mode = 2 * site + spin`;
//! * a ladder operator acting on mode `p` picks up the sign
//!   `(-1)^(number of occupied modes with index < p)`;
//! * basis states are ordered by the spin-up occupation bitmask (major) and
//!   then the spin-down bitmask, each in increasing numeric order, where bit
//!   `i` of a mask is the occupation of site `i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::LinearOperator;
use crate::{Error, Result, C64};

/// Largest lattice representable with `u32` occupation masks.
pub const MAX_SITES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Spin::Up => 'u',
            Spin::Down => 'd',
        }
    }
}

/// Open-boundary rectangular lattice with fixed particle numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub n_up: usize,
    pub n_down: usize,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize, n_up: usize, n_down: usize) -> Result<Self> {
        let l = rows * cols;
        if l == 0 {
            return Err(Error::InvalidLattice(format!("{rows}x{cols} has no sites")));
        }
        if l > MAX_SITES {
            return Err(Error::InvalidLattice(format!("{l} sites exceed the limit of {MAX_SITES}")));
        }
        if n_up > l || n_down > l {
            return Err(Error::InvalidLattice(format!(
                "particle numbers ({n_up}, {n_down}) exceed {l} sites"
            )));
        }
        Ok(LatticeSpec {
            rows,
            cols,
            n_up,
            n_down,
        })
    }

    pub fn sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Nearest-neighbour bonds `(i, j)` with `i < j`: horizontal bonds in
    /// row-major order, then vertical bonds in row-major order.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols.saturating_sub(1) {
                out.push((self.site(r, c), self.site(r, c + 1)));
            }
        }
        for r in 0..self.rows.saturating_sub(1) {
            for c in 0..self.cols {
                out.push((self.site(r, c), self.site(r + 1, c)));
            }
        }
        out
    }

    /// Nearest neighbours of `site`, ascending.
    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .bonds()
            .into_iter()
            .filter_map(|(i, j)| {
                if i == site {
                    Some(j)
                } else if j == site {
                    Some(i)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Creation (`dagger = true`) or annihilation operator on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ladder {
    pub site: usize,
    pub spin: Spin,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(site: usize, spin: Spin) -> Self {
        Ladder {
            site,
            spin,
            dagger: true,
        }
    }

    pub fn annihilate(site: usize, spin: Spin) -> Self {
        Ladder {
            site,
            spin,
            dagger: false,
        }
    }
}

/// `coefficient * product[0] * product[1] * ...`; the rightmost ladder acts
/// first.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coefficient: C64,
    pub product: Vec<Ladder>,
}

impl FermionTerm {
    pub fn new(coefficient: C64, product: Vec<Ladder>) -> Self {
        FermionTerm {
            coefficient,
            product,
        }
    }

    pub fn adjoint(&self) -> Self {
        FermionTerm {
            coefficient: self.coefficient.conj(),
            product: self
                .product
                .iter()
                .rev()
                .map(|l| Ladder {
                    dagger: !l.dagger,
                    ..*l
                })
                .collect(),
        }
    }

    /// `n_{site, spin}`
    pub fn number(site: usize, spin: Spin) -> Self {
        Self::new(
            C64::new(1.0, 0.0),
            vec![Ladder::create(site, spin), Ladder::annihilate(site, spin)],
        )
    }

    /// `n_{site,up} n_{site,down}`
    pub fn doublon(site: usize) -> Self {
        Self::new(
            C64::new(1.0, 0.0),
            vec![
                Ladder::create(site, Spin::Up),
                Ladder::annihilate(site, Spin::Up),
                Ladder::create(site, Spin::Down),
                Ladder::annihilate(site, Spin::Down),
            ],
        )
    }

    /// `coefficient c†_i c_j` and its Hermitian conjugate.
    pub fn hopping(i: usize, j: usize, spin: Spin, coefficient: C64) -> [Self; 2] {
        let t = Self::new(coefficient, vec![Ladder::create(i, spin), Ladder::annihilate(j, spin)]);
        let h = t.adjoint();
        [t, h]
    }

    pub fn max_site(&self) -> Option<usize> {
        self.product.iter().map(|l| l.site).max()
    }

    /// Action on the occupation configuration `(up, down)`.
    pub fn act(&self, up: u32, down: u32) -> Option<(f64, u32, u32)> {
        let mut u = up;
        let mut d = down;
        let mut sign = 1.0;
        for l in self.product.iter().rev() {
            let bit = 1u32 << l.site;
            let occupied = match l.spin {
                Spin::Up => u & bit != 0,
                Spin::Down => d & bit != 0,
            };
            if occupied == l.dagger {
                return None;
            }
            if mode_parity(u, d, l.site, l.spin) {
                sign = -sign;
            }
            match l.spin {
                Spin::Up => u ^= bit,
                Spin::Down => d ^= bit,
            }
        }
        Some((sign, u, d))
    }
}

/// Parity of the occupied modes that precede `(site, spin)`.
fn mode_parity(up: u32, down: u32, site: usize, spin: Spin) -> bool {
    let below = (1u32 << site) - 1;
    let mut n = (up & below).count_ones() + (down & below).count_ones();
    if spin == Spin::Down {
        n += (up >> site) & 1;
    }
    n % 2 == 1
}

/// Enumerated fixed-`(N_up, N_down)` sector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FermionSector {
    lattice: LatticeSpec,
    up: Vec<u32>,
    down: Vec<u32>,
    binom: Vec<Vec<u64>>,
}

/// Builds the occupation basis of `lattice`'s `(N_up, N_down)` sector.
pub fn build_fermion_basis(lattice: &LatticeSpec) -> Result<FermionSector> {
    let lattice = LatticeSpec::new(lattice.rows, lattice.cols, lattice.n_up, lattice.n_down)?;
    let l = lattice.sites();
    let masks = |k: usize| -> Vec<u32> {
        let mut out = Vec::new();
        // Gosper's hack walks k-subsets in increasing numeric order
        if k == 0 {
            out.push(0);
            return out;
        }
        let limit: u64 = 1u64 << l;
        let mut m: u64 = (1u64 << k) - 1;
        while m < limit {
            out.push(m as u32);
            let c = m & m.wrapping_neg();
            let r = m + c;
            m = (((r ^ m) >> 2) / c) | r;
        }
        out
    };
    let mut binom = vec![vec![0u64; MAX_SITES + 2]; MAX_SITES + 2];
    for n in 0..binom.len() {
        binom[n][0] = 1;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0 };
        }
    }
    Ok(FermionSector {
        up: masks(lattice.n_up),
        down: masks(lattice.n_down),
        lattice,
        binom,
    })
}

impl FermionSector {
    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.up.len() * self.down.len()
    }

    /// Rank of a mask among masks with the same popcount, in numeric order.
    fn rank(&self, mask: u32) -> usize {
        let mut r = 0u64;
        let mut m = mask;
        let mut t = 1;
        while m != 0 {
            let pos = m.trailing_zeros() as usize;
            r += self.binom[pos][t];
            t += 1;
            m &= m - 1;
        }
        r as usize
    }

    pub fn index(&self, up: u32, down: u32) -> Option<usize> {
        if up.count_ones() as usize != self.lattice.n_up || down.count_ones() as usize != self.lattice.n_down {
            return None;
        }
        Some(self.rank(up) * self.down.len() + self.rank(down))
    }

    pub fn config(&self, index: usize) -> (u32, u32) {
        let nd = self.down.len();
        (self.up[index / nd], self.down[index % nd])
    }

    fn check_term(&self, term: &FermionTerm) -> Result<()> {
        match term.max_site() {
            Some(s) if s >= self.lattice.sites() => Err(Error::IndexOutOfRange {
                what: "site",
                index: s,
                len: self.lattice.sites(),
            }),
            _ => Ok(()),
        }
    }
}

/// Sum of fermion terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FermionOperator {
    pub terms: Vec<FermionTerm>,
}

impl FermionOperator {
    pub fn new(terms: Vec<FermionTerm>) -> Self {
        FermionOperator { terms }
    }

    pub fn adjoint(&self) -> Self {
        FermionOperator::new(self.terms.iter().map(FermionTerm::adjoint).collect())
    }

    pub fn scaled(&self, c: C64) -> Self {
        FermionOperator::new(
            self.terms
                .iter()
                .map(|t| FermionTerm::new(t.coefficient * c, t.product.clone()))
                .collect(),
        )
    }

    /// Product `self * other` expanded term by term.
    pub fn mul(&self, other: &FermionOperator) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut p = a.product.clone();
                p.extend_from_slice(&b.product);
                out.push(FermionTerm::new(a.coefficient * b.coefficient, p));
            }
        }
        FermionOperator::new(out)
    }

    pub fn plus(&self, other: &FermionOperator) -> Self {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        FermionOperator::new(t)
    }

    /// Matrix-free action on `sector`.
    pub fn on<'a>(&'a self, sector: &'a FermionSector) -> Result<SectorAction<'a>> {
        for t in &self.terms {
            sector.check_term(t)?;
        }
        Ok(SectorAction { sector, op: self })
    }
}

/// A [`FermionOperator`] bound to a sector.
#[derive(Debug, Clone, Copy)]
pub struct SectorAction<'a> {
    sector: &'a FermionSector,
    op: &'a FermionOperator,
}

impl LinearOperator for SectorAction<'_> {
    fn dim(&self) -> usize {
        self.sector.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (j, amp) in x.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let (u, d) = self.sector.config(j);
            for t in &self.op.terms {
                if let Some((s, u2, d2)) = t.act(u, d) {
                    if let Some(i) = self.sector.index(u2, d2) {
                        y[i] += t.coefficient * s * amp;
                    }
                }
            }
        }
    }
}

/// Fermi-Hubbard Hamiltonian `-J sum (c†_i c_j + h.c.) + U sum n_up n_down`.
pub fn hubbard_terms(lattice: &LatticeSpec, j: f64, u: f64) -> Vec<FermionTerm> {
    let mut out = Vec::new();
    for (a, b) in lattice.bonds() {
        for s in Spin::BOTH {
            out.extend(FermionTerm::hopping(a, b, s, C64::new(-j, 0.0)));
        }
    }
    for site in 0..lattice.sites() {
        let mut d = FermionTerm::doublon(site);
        d.coefficient = C64::new(u, 0.0);
        out.push(d);
    }
    out
}
