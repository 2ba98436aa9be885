//! Local Hamiltonians with X/Z factors only, plus acceptance thresholds.

use alloc::format;
use alloc::vec::Vec;

use crate::qsim::{assemble_operator, expectation, ground_state, Basis, OperatorMatrix, PauliTerm, QuantumState, Term};
use crate::{Error, Result};

use super::clock::{build_clock_instance, Circuit, ClockInstance};

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianInstance {
    pub n_qubits: usize,
    pub terms: Vec<PauliTerm>,
    /// Accept below `a`, reject above `b`.
    pub a: f64,
    pub b: f64,
}

impl HamiltonianInstance {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>, a: f64, b: f64) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.n_qubits() != n_qubits {
                return Err(Error::LengthMismatch(t.n_qubits(), n_qubits));
            }
            if !t.is_xz() {
                return Err(Error::NotXz(i));
            }
        }
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(Error::InvalidArgument(format!("thresholds need a < b, got a = {a}, b = {b}")));
        }
        Ok(HamiltonianInstance { n_qubits, terms, a, b })
    }

    /// Thresholds taken from the spectrum: `a` is the ground energy, `b`
    /// the first level strictly above it (gap above `1e-9`).
    pub fn with_spectral_thresholds(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        let levels = spectrum(n_qubits, &terms)?;
        let e0 = levels[0];
        let e1 = levels
            .iter()
            .copied()
            .find(|e| *e > e0 + 1e-9)
            .ok_or_else(|| Error::InvalidArgument("Hamiltonian has a single level".into()))?;
        Self::new(n_qubits, terms, e0, e1)
    }

    /// Instance built from a circuit: `a` is the ground energy of its
    /// circuit Hamiltonian, `b` that of the same construction with the
    /// output test inverted. Fails when the circuit does not accept.
    pub fn from_circuit(circuit: &Circuit) -> Result<(Self, ClockInstance)> {
        let yes = build_clock_instance(circuit)?;
        let terms = yes.hamiltonian()?;
        let n = yes.n_qubits();
        let mut flipped_out = Vec::new();
        for t in &yes.h_out {
            // |0><0| = (I + Z)/2 on the output qubit; flip to |1><1| by
            // negating terms with Z there.
            let mut t = t.clone();
            if t.factors[yes.n_clock + circuit.output] != crate::qsim::Pauli::I {
                t.coefficient = -t.coefficient;
            }
            flipped_out.push(t);
        }
        let mut no_terms: Vec<PauliTerm> = yes.h_prop.iter().chain(&yes.h_in).chain(&yes.h_clock).cloned().collect();
        no_terms.extend(flipped_out);
        let a = spectrum(n, &terms)?[0];
        let b = spectrum(n, &no_terms)?[0];
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(Error::InvalidArgument(format!(
                "circuit does not accept: yes energy {a}, no energy {b}"
            )));
        }
        Ok((Self::new(n, terms, a, b)?, yes))
    }

    pub fn threshold(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn operator(&self) -> Result<OperatorMatrix> {
        let terms: Vec<Term> = self.terms.iter().cloned().map(Term::from).collect();
        assemble_operator(&terms, &Basis::qubits(self.n_qubits)?)
    }

    pub fn energy(&self, state: &QuantumState) -> Result<f64> {
        Ok(expectation(state, &self.operator()?)?.re)
    }

    pub fn ground_state(&self) -> Result<(f64, QuantumState)> {
        ground_state(&self.operator()?)
    }

    /// Sum of identity coefficients and the weight `sum |c|` of the rest.
    pub fn offset_and_weight(&self) -> (f64, f64) {
        let mut offset = 0.0;
        let mut weight = 0.0;
        for t in &self.terms {
            if t.is_identity() {
                offset += t.coefficient;
            } else {
                weight += t.coefficient.abs();
            }
        }
        (offset, weight)
    }
}

fn spectrum(n: usize, terms: &[PauliTerm]) -> Result<Vec<f64>> {
    let t: Vec<Term> = terms.iter().cloned().map(Term::from).collect();
    let h = assemble_operator(&t, &Basis::qubits(n)?)?;
    if h.basis().dim() > crate::linalg::DENSE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: h.basis().dim(),
            limit: crate::linalg::DENSE_LIMIT,
        });
    }
    Ok(crate::linalg::hermitian_eigen(&h.to_dense()?).values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_y_factors_and_bad_thresholds() {
        let y = PauliTerm::parse(1.0, "YI").unwrap();
        assert_eq!(HamiltonianInstance::new(2, alloc::vec![y], 0.0, 1.0), Err(Error::NotXz(0)));
        let z = PauliTerm::parse(1.0, "ZI").unwrap();
        assert!(HamiltonianInstance::new(2, alloc::vec![z], 1.0, 1.0).is_err());
    }

    #[test]
    fn minimal_circuit_thresholds() {
        let (inst, clock) = HamiltonianInstance::from_circuit(&Circuit::minimal()).unwrap();
        assert!(inst.a.abs() < 1e-10);
        assert!(inst.b > inst.a);
        assert!(inst.energy(&clock.eta).unwrap() < inst.threshold());
    }
}
