use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use crate::hamlearn::basis::OperatorBasis;
use crate::hamlearn::constraints::ConstraintSet;
use crate::linalg::{norm, vdot, LinearOperator};
use crate::qsim::fermion::{FermionOperator, FermionSector, LatticeSpec};
use crate::qsim::measure::BornDistribution;
use crate::qsim::operator::{assemble_operator, Term};
use crate::qsim::state::{Basis, QuantumState};
use crate::rng::Seed;
use crate::{Error, Result, C64};

/// Largest sector for which [`SamplingMode::Auto`] picks Born sampling.
pub const AUTO_BORN_LIMIT: usize = 512;

/// How K entries are estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingMode {
    /// Exact expectation values.
    Exact,
    /// Projective measurement of each commutator observable.
    Born,
    /// Exact value plus `N(0, Var(O)/shots)` noise.
    Gaussian,
    /// `Born` up to [`AUTO_BORN_LIMIT`] basis states, `Gaussian` above.
    #[default]
    Auto,
}

impl SamplingMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplingMode::Exact => "exact",
            SamplingMode::Born => "born",
            SamplingMode::Gaussian => "gaussian",
            SamplingMode::Auto => "auto",
        }
    }
}

/// Constraint matrix `K_nm = <-i [A_n, S_m]>`.
#[derive(Clone, Debug, PartialEq)]
pub struct KMatrix {
    /// `N_C x M`
    pub entries: DMatrix<f64>,
    /// Shots per entry, 0 for exact.
    pub shots: u64,
    /// Mode actually used; never `Auto`.
    pub mode: SamplingMode,
    pub seed: Option<u64>,
}

impl KMatrix {
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite K entry".into()));
        }
        Ok(KMatrix {
            entries,
            shots: 0,
            mode: SamplingMode::Exact,
            seed: None,
        })
    }

    pub fn n_constraints(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_elements(&self) -> usize {
        self.entries.ncols()
    }

    /// The first `n` rows.
    pub fn prefix(&self, n: usize) -> KMatrix {
        let n = n.min(self.n_constraints());
        KMatrix {
            entries: self.entries.rows(0, n).into_owned(),
            ..self.clone()
        }
    }

    /// `||K c|| / ||K||_F` with `c` normalized.
    pub fn relative_residual(&self, c: &[f64]) -> f64 {
        let cn: f64 = libm::sqrt(c.iter().map(|x| x * x).sum());
        let kn = self.entries.norm();
        if cn == 0.0 || kn == 0.0 {
            return 0.0;
        }
        let v = nalgebra::DVector::from_column_slice(c) / cn;
        (&self.entries * v).norm() / kn
    }
}

/// State-side data shared by all rows: the pure components of the state
/// and every `S_m |psi_k>`.
#[derive(Debug)]
pub struct KContext<'a> {
    sector: &'a FermionSector,
    basis: &'a OperatorBasis,
    components: Vec<(f64, Vec<C64>)>,
    s_psi: Vec<Vec<Vec<C64>>>,
}

impl<'a> KContext<'a> {
    pub fn new(state: &'a QuantumState, basis: &'a OperatorBasis) -> Result<Self> {
        let sector = match state.basis() {
            Basis::Fermion(s) => &**s,
            b => return Err(Error::BasisMismatch(format!("operator basis needs a fermion sector, got {b}"))),
        };
        let (l, s) = (sector.lattice(), &basis.lattice);
        if (l.rows, l.cols) != (s.rows, s.cols) {
            return Err(Error::BasisMismatch(format!(
                "state on {}x{} vs operator basis on {}x{}",
                l.rows, l.cols, s.rows, s.cols
            )));
        }
        let components = state.ensemble();
        let mut s_psi = Vec::with_capacity(components.len());
        for (_, psi) in &components {
            let mut per = Vec::with_capacity(basis.len());
            for e in &basis.elements {
                per.push(e.operator.on(sector)?.apply(psi));
            }
            s_psi.push(per);
        }
        Ok(KContext {
            sector,
            basis,
            components,
            s_psi,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.basis.lattice
    }

    /// Exact row `K_n.` for the constraint `a`.
    pub fn row(&self, a: &FermionOperator) -> Result<Vec<f64>> {
        let op = a.on(self.sector)?;
        let mut row = alloc::vec![0.0; self.basis.len()];
        for ((p, psi), spsi) in self.components.iter().zip(&self.s_psi) {
            let apsi = op.apply(psi);
            for (r, sv) in row.iter_mut().zip(spsi) {
                // <-i[A,S]> = 2 Im <A psi | S psi> for Hermitian A, S
                *r += p * 2.0 * vdot(&apsi, sv).im;
            }
        }
        Ok(row)
    }

    /// `(<O>, Var O)` of `O = -i[A, S_m]`, evaluated matrix-free.
    fn moments(&self, a: &FermionOperator, m: usize) -> Result<(f64, f64)> {
        let aop = a.on(self.sector)?;
        let sop = self.basis.elements[m].operator.on(self.sector)?;
        let (mut mean, mut second) = (0.0, 0.0);
        for ((p, psi), spsi) in self.components.iter().zip(&self.s_psi) {
            let apsi = aop.apply(psi);
            let a_s = aop.apply(&spsi[m]);
            let s_a = sop.apply(&apsi);
            let o: Vec<C64> = a_s.iter().zip(&s_a).map(|(x, y)| (x - y) * C64::new(0.0, -1.0)).collect();
            mean += p * vdot(psi, &o).re;
            let r = norm(&o);
            second += p * r * r;
        }
        Ok((mean, (second - mean * mean).max(0.0)))
    }
}

/// The commutator observable `-i[A, S]`.
pub fn commutator_observable(a: &FermionOperator, s: &FermionOperator) -> FermionOperator {
    a.mul(s)
        .plus(&s.mul(a).scaled(C64::new(-1.0, 0.0)))
        .scaled(C64::new(0.0, -1.0))
}

/// Exact K on `state`.
pub fn k_matrix_exact(state: &QuantumState, basis: &OperatorBasis, constraints: &ConstraintSet) -> Result<KMatrix> {
    let ctx = KContext::new(state, basis)?;
    k_matrix_from_context(&ctx, constraints)
}

pub fn k_matrix_from_context(ctx: &KContext<'_>, constraints: &ConstraintSet) -> Result<KMatrix> {
    let m = ctx.basis.len();
    let mut k = DMatrix::zeros(constraints.len(), m);
    for (n, c) in constraints.constraints.iter().enumerate() {
        for (j, v) in ctx.row(&c.operator)?.into_iter().enumerate() {
            k[(n, j)] = v;
        }
    }
    KMatrix::from_entries(k)
}

#[derive(Clone, Debug)]
enum EntryModel {
    Born(BornDistribution),
    Gaussian { mean: f64, variance: f64 },
}

/// Per-entry measurement statistics, prepared once and sampled at any shot
/// budget.
#[derive(Clone, Debug)]
pub struct SampledKModel {
    n_c: usize,
    m: usize,
    mode: SamplingMode,
    entries: Vec<EntryModel>,
}

impl SampledKModel {
    pub fn new(
        state: &QuantumState,
        basis: &OperatorBasis,
        constraints: &ConstraintSet,
        mode: SamplingMode,
    ) -> Result<Self> {
        let ctx = KContext::new(state, basis)?;
        let mode = match mode {
            SamplingMode::Auto if state.dim() <= AUTO_BORN_LIMIT => SamplingMode::Born,
            SamplingMode::Auto => SamplingMode::Gaussian,
            m => m,
        };
        let (n_c, m) = (constraints.len(), basis.len());
        let mut entries = Vec::with_capacity(n_c * m);
        for c in &constraints.constraints {
            for (j, e) in basis.elements.iter().enumerate() {
                entries.push(match mode {
                    SamplingMode::Born => {
                        let o = commutator_observable(&c.operator, &e.operator);
                        let terms: Vec<Term> = o.terms.into_iter().map(Term::Fermion).collect();
                        let mat = assemble_operator(&terms, state.basis())?;
                        EntryModel::Born(BornDistribution::new(state, &mat)?)
                    }
                    _ => {
                        let (mean, variance) = ctx.moments(&c.operator, j)?;
                        EntryModel::Gaussian { mean, variance }
                    }
                });
            }
        }
        Ok(SampledKModel {
            n_c,
            m,
            mode,
            entries,
        })
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    /// Exact means of every entry.
    pub fn mean(&self) -> Result<KMatrix> {
        KMatrix::from_entries(DMatrix::from_fn(self.n_c, self.m, |n, j| match &self.entries[n * self.m + j] {
            EntryModel::Born(b) => b.mean(),
            EntryModel::Gaussian { mean, .. } => *mean,
        }))
    }

    /// K estimated from `shots` measurements per entry. Entry `(n, m)` draws
    /// from `seed.split(n * M + m)`, so row prefixes agree across `N_C`.
    pub fn sample(&self, shots: u64, seed: Seed) -> Result<KMatrix> {
        if shots == 0 {
            return Err(Error::TooFewShots(0));
        }
        let mut k = DMatrix::zeros(self.n_c, self.m);
        for n in 0..self.n_c {
            for j in 0..self.m {
                let idx = n * self.m + j;
                let mut rng = seed.split(idx as u64).rng();
                k[(n, j)] = match &self.entries[idx] {
                    EntryModel::Born(b) => b.sample(shots, &mut rng)?.0,
                    EntryModel::Gaussian { mean, variance } => {
                        let sd = libm::sqrt(variance / shots as f64);
                        mean + Normal::new(0.0, sd).map(|d| d.sample(&mut rng)).unwrap_or(0.0)
                    }
                };
            }
        }
        Ok(KMatrix {
            entries: k,
            shots,
            mode: self.mode,
            seed: Some(seed.0),
        })
    }
}

/// K estimated from `shots` measurements per entry.
pub fn k_matrix_sampled(
    state: &QuantumState,
    basis: &OperatorBasis,
    constraints: &ConstraintSet,
    shots: u64,
    seed: Seed,
    mode: SamplingMode,
) -> Result<KMatrix> {
    if mode == SamplingMode::Exact {
        return k_matrix_exact(state, basis, constraints);
    }
    SampledKModel::new(state, basis, constraints, mode)?.sample(shots, seed)
}
