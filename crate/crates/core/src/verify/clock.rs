//! Circuit-to-Hamiltonian (Feynman–Kitaev) construction with a binary clock.
//!
//! Clock qubits come first, computational qubits after them. Time step `t`
//! is stored as the Gray code `t ^ (t >> 1)`, so consecutive steps differ in
//! one clock bit and each propagation term stays local on the clock.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::CMatrix;
use crate::qsim::{assemble_operator, Basis, PauliSum, PauliTerm, QuantumState, Term};
use crate::{Error, Result, C64};

use super::register::apply_matrix;

/// Largest total register (clock plus computation) accepted.
pub const MAX_CLOCK_QUBITS: usize = 12;

const TERM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub qubits: Vec<usize>,
    pub matrix: CMatrix,
}

fn real(rows: usize, v: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, rows, v.iter().map(|x| C64::new(*x, 0.0)))
}

impl Gate {
    /// Arbitrary one- or two-qubit unitary.
    pub fn custom(name: &str, qubits: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        if qubits.is_empty() || qubits.len() > 2 {
            return Err(Error::UnsupportedGateArity(qubits.len()));
        }
        let d = 1 << qubits.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidArgument(format!("gate {name} needs a {d}x{d} matrix")));
        }
        let defect = (matrix.adjoint() * &matrix - CMatrix::identity(d, d)).norm();
        if defect > 1e-10 {
            return Err(Error::NonUnitary {
                qubit: qubits[0],
                deviation: defect,
            });
        }
        Ok(Gate {
            name: name.into(),
            qubits,
            matrix,
        })
    }

    fn fixed(name: &str, qubits: Vec<usize>, m: CMatrix) -> Self {
        Gate {
            name: name.into(),
            qubits,
            matrix: m,
        }
    }

    pub fn h(q: usize) -> Self {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        Self::fixed("h", vec![q], real(2, &[s, s, s, -s]))
    }

    pub fn x(q: usize) -> Self {
        Self::fixed("x", vec![q], real(2, &[0.0, 1.0, 1.0, 0.0]))
    }

    pub fn z(q: usize) -> Self {
        Self::fixed("z", vec![q], real(2, &[1.0, 0.0, 0.0, -1.0]))
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        #[rustfmt::skip]
        let m = real(4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        Self::fixed("cnot", vec![control, target], m)
    }

    pub fn cz(a: usize, b: usize) -> Self {
        let mut m = CMatrix::identity(4, 4);
        m[(3, 3)] = C64::new(-1.0, 0.0);
        Self::fixed("cz", vec![a, b], m)
    }

    pub fn swap(a: usize, b: usize) -> Self {
        #[rustfmt::skip]
        let m = real(4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        ]);
        Self::fixed("swap", vec![a, b], m)
    }
}

/// Gates on `n_qubits` computational qubits starting in `|0...0>`. The
/// circuit accepts when `output` reads 1 at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub output: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            if g.qubits.is_empty() || g.qubits.len() > 2 {
                return Err(Error::UnsupportedGateArity(g.qubits.len()));
            }
            for (a, &q) in g.qubits.iter().enumerate() {
                if q >= n_qubits {
                    return Err(Error::IndexOutOfRange {
                        what: "qubit",
                        index: q,
                        len: n_qubits,
                    });
                }
                if g.qubits[..a].contains(&q) {
                    return Err(Error::RegisterCollision(q));
                }
            }
        }
        Ok(Circuit {
            n_qubits,
            gates,
            output: 0,
        })
    }

    /// `X(0)`, `CNOT(0 -> 1)`, `H(1)`: output qubit 0 reads 1 with
    /// certainty.
    pub fn minimal() -> Self {
        Circuit::new(2, vec![Gate::x(0), Gate::cnot(0, 1), Gate::h(1)]).expect("valid circuit")
    }

    pub fn with_output(mut self, q: usize) -> Result<Self> {
        if q >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: q,
                len: self.n_qubits,
            });
        }
        self.output = q;
        Ok(self)
    }

    /// Output state `U_T ... U_1 |0...0>`.
    pub fn run(&self) -> Vec<C64> {
        let mut psi = vec![C64::new(0.0, 0.0); 1 << self.n_qubits];
        psi[0] = C64::new(1.0, 0.0);
        for g in &self.gates {
            apply_matrix(&mut psi, &g.qubits, &g.matrix);
        }
        psi
    }

    pub fn acceptance_probability(&self) -> f64 {
        let shift = self.n_qubits - 1 - self.output;
        self.run()
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> shift) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

pub fn gray(t: usize) -> usize {
    t ^ (t >> 1)
}

pub fn clock_qubits(steps: usize) -> usize {
    (usize::BITS - steps.leading_zeros()) as usize
}

#[derive(Clone, Debug)]
pub struct ClockInstance {
    pub circuit: Circuit,
    pub steps: usize,
    pub n_clock: usize,
    pub eta: QuantumState,
    pub h_prop: Vec<PauliTerm>,
    pub h_in: Vec<PauliTerm>,
    pub h_out: Vec<PauliTerm>,
    /// Penalty on clock codes that label no time step.
    pub h_clock: Vec<PauliTerm>,
}

impl ClockInstance {
    pub fn n_qubits(&self) -> usize {
        self.n_clock + self.circuit.n_qubits
    }

    /// All four parts merged into one term list.
    pub fn hamiltonian(&self) -> Result<Vec<PauliTerm>> {
        let n = self.n_qubits();
        let mut sum = PauliSum::zero(n);
        for t in self.h_prop.iter().chain(&self.h_in).chain(&self.h_out).chain(&self.h_clock) {
            sum.add_term(t.factors.clone(), C64::new(t.coefficient, 0.0));
        }
        sum.to_hermitian_terms(TERM_TOL)
    }

    pub fn propagation_residual(&self) -> Result<f64> {
        let terms: Vec<Term> = self.h_prop.iter().cloned().map(Term::from).collect();
        let h = assemble_operator(&terms, &Basis::qubits(self.n_qubits())?)?;
        let v = crate::linalg::LinearOperator::apply(&h, self.eta.amplitudes().expect("pure"));
        Ok(crate::linalg::norm(&v))
    }
}

/// `|g><g|` on the clock qubits as a local matrix.
fn clock_projector(c: usize, g: usize) -> CMatrix {
    let mut m = CMatrix::zeros(1 << c, 1 << c);
    m[(g, g)] = C64::new(1.0, 0.0);
    m
}

fn local_terms(n: usize, qubits: &[usize], m: &CMatrix) -> Result<Vec<PauliTerm>> {
    PauliSum::from_local(n, qubits, m)?.to_hermitian_terms(TERM_TOL)
}

pub fn build_clock_instance(circuit: &Circuit) -> Result<ClockInstance> {
    let steps = circuit.gates.len();
    let c = clock_qubits(steps);
    let nc = circuit.n_qubits;
    let n = c + nc;
    if n > MAX_CLOCK_QUBITS {
        return Err(Error::DimensionTooLarge {
            dim: 1 << n,
            limit: 1 << MAX_CLOCK_QUBITS,
        });
    }
    let clock: Vec<usize> = (0..c).collect();
    let comp = |q: usize| c + q;

    // history state
    let mut eta = vec![C64::new(0.0, 0.0); 1 << n];
    let mut psi = vec![C64::new(0.0, 0.0); 1 << nc];
    psi[0] = C64::new(1.0, 0.0);
    let w = 1.0 / libm::sqrt((steps + 1) as f64);
    for t in 0..=steps {
        if t > 0 {
            let g = &circuit.gates[t - 1];
            apply_matrix(&mut psi, &g.qubits, &g.matrix);
        }
        let base = gray(t) << nc;
        for (s, a) in psi.iter().enumerate() {
            eta[base | s] = a * w;
        }
    }
    let eta = QuantumState::pure(Basis::qubits(n)?, eta)?;

    let mut h_prop = Vec::new();
    for t in 1..=steps {
        let g = &circuit.gates[t - 1];
        let k = g.qubits.len();
        let dk = 1 << k;
        let (now, prev) = (gray(t), gray(t - 1));
        let mut qubits = clock.clone();
        qubits.extend(g.qubits.iter().map(|&q| comp(q)));
        let mut m = CMatrix::zeros(1 << (c + k), 1 << (c + k));
        for a in 0..dk {
            m[((now << k) | a, (now << k) | a)] += C64::new(0.5, 0.0);
            m[((prev << k) | a, (prev << k) | a)] += C64::new(0.5, 0.0);
            for b in 0..dk {
                let u = g.matrix[(a, b)];
                m[((now << k) | a, (prev << k) | b)] -= u * 0.5;
                m[((prev << k) | b, (now << k) | a)] -= u.conj() * 0.5;
            }
        }
        h_prop.extend(local_terms(n, &qubits, &m)?);
    }

    let mut h_in = Vec::new();
    for q in 0..nc {
        let mut qubits = clock.clone();
        qubits.push(comp(q));
        let mut m = CMatrix::zeros(1 << (c + 1), 1 << (c + 1));
        m[((gray(0) << 1) | 1, (gray(0) << 1) | 1)] = C64::new(1.0, 0.0);
        h_in.extend(local_terms(n, &qubits, &m)?);
    }

    let mut qubits = clock.clone();
    qubits.push(comp(circuit.output));
    let mut m = CMatrix::zeros(1 << (c + 1), 1 << (c + 1));
    m[(gray(steps) << 1, gray(steps) << 1)] = C64::new(1.0, 0.0);
    let h_out = local_terms(n, &qubits, &m)?;

    let mut h_clock = Vec::new();
    if c > 0 {
        let mut m = CMatrix::zeros(1 << c, 1 << c);
        for t in steps + 1..1 << c {
            m += clock_projector(c, gray(t));
        }
        if m.norm() > 0.0 {
            h_clock = local_terms(n, &clock, &m)?;
        }
    }

    let inst = ClockInstance {
        circuit: circuit.clone(),
        steps,
        n_clock: c,
        eta,
        h_prop,
        h_in,
        h_out,
        h_clock,
    };
    let res = inst.propagation_residual()?;
    if res > 1e-10 {
        return Err(Error::InvalidState(format!("history state not stationary: {res:e}")));
    }
    Ok(inst)
}
