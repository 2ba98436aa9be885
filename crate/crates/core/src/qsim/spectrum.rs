//! Ground states, Gibbs states and unitary time evolution.

use alloc::vec::Vec;

use libm::{cos, exp, sin};

use crate::linalg::{
    hermitian_eigen, krylov_propagate, lanczos_lowest, norm, LanczosOptions, LinearOperator, DENSE_LIMIT,
};
use crate::qsim::operator::OperatorMatrix;
use crate::qsim::state::{QuantumState, StateData};
use crate::{Error, Result, C64};

/// Relative residual guaranteed by [`ground_state`].
pub const GROUND_STATE_RESIDUAL: f64 = 1e-8;

/// Local error target of the Krylov propagator.
pub const PROPAGATION_TOL: f64 = 1e-8;

fn require_hermitian(h: &OperatorMatrix) -> Result<()> {
    if h.is_hermitian() {
        Ok(())
    } else {
        Err(Error::NotHermitian(h.hermiticity_defect()))
    }
}

/// Lowest eigenpair. Dense diagonalization up to [`DENSE_LIMIT`], restarted
/// Lanczos above it.
pub fn ground_state(h: &OperatorMatrix) -> Result<(f64, QuantumState)> {
    ground_state_with(h, &LanczosOptions::default())
}

pub fn ground_state_with(h: &OperatorMatrix, opts: &LanczosOptions) -> Result<(f64, QuantumState)> {
    require_hermitian(h)?;
    let d = h.dim();
    if d == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    let (e, v) = if d <= DENSE_LIMIT {
        let eig = hermitian_eigen(&h.to_dense()?);
        (eig.values[0], eig.vectors.column(0).iter().copied().collect::<Vec<_>>())
    } else {
        let pair = lanczos_lowest(h, h.norm_bound(), opts)?;
        (pair.value, pair.vector)
    };
    let residual = residual(h, e, &v);
    // |E| and every |H_ii| are lower bounds on ||H||
    let lower = (0..d).map(|i| h.get(i, i).norm()).fold(e.abs(), f64::max);
    debug_assert!(
        residual <= GROUND_STATE_RESIDUAL * lower.max(1e-300),
        "ground-state residual {residual} exceeds bound for ||H|| >= {lower}"
    );
    if residual > GROUND_STATE_RESIDUAL * h.norm_bound() {
        return Err(Error::NonConvergence {
            iterations: opts.max_restarts,
            residual,
        });
    }
    Ok((e, QuantumState::from_parts(h.basis().clone(), StateData::Pure(v))))
}

/// `||H v - E v||`
pub fn residual(h: &OperatorMatrix, e: f64, v: &[C64]) -> f64 {
    let mut hv = h.apply(v);
    for (a, b) in hv.iter_mut().zip(v) {
        *a -= b * e;
    }
    norm(&hv)
}

/// `exp(-beta H) / Tr exp(-beta H)`
pub fn thermal_state(h: &OperatorMatrix, beta: f64) -> Result<QuantumState> {
    require_hermitian(h)?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument("inverse temperature must be finite and >= 0".into()));
    }
    let eig = hermitian_eigen(&h.to_dense()?);
    let e0 = eig.values[0];
    // shifting by the ground energy keeps every weight <= 1
    let w: Vec<f64> = eig.values.iter().map(|&e| exp(-beta * (e - e0))).collect();
    let z: f64 = w.iter().sum();
    let d = h.dim();
    let v = &eig.vectors;
    let rho = crate::linalg::CMatrix::from_fn(d, d, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..d {
            if w[k] != 0.0 {
                acc += v[(i, k)] * v[(j, k)].conj() * (w[k] / z);
            }
        }
        acc
    });
    Ok(QuantumState::from_parts(h.basis().clone(), StateData::Mixed(rho)))
}

/// `exp(-i H t) |psi>` for a pure state.
pub fn time_evolve(state: &QuantumState, h: &OperatorMatrix, t: f64) -> Result<QuantumState> {
    require_hermitian(h)?;
    state.basis().ensure_same(h.basis())?;
    let psi = state
        .amplitudes()
        .ok_or_else(|| Error::InvalidState("time evolution needs a pure state".into()))?;
    if t == 0.0 {
        return Ok(state.clone());
    }
    let d = h.dim();
    let out = if d <= DENSE_LIMIT {
        let eig = hermitian_eigen(&h.to_dense()?);
        let v = &eig.vectors;
        let mut coef = Vec::with_capacity(d);
        for k in 0..d {
            let mut c = C64::new(0.0, 0.0);
            for i in 0..d {
                c += v[(i, k)].conj() * psi[i];
            }
            let ph = -eig.values[k] * t;
            coef.push(c * C64::new(cos(ph), sin(ph)));
        }
        (0..d)
            .map(|i| (0..d).map(|k| v[(i, k)] * coef[k]).sum())
            .collect()
    } else {
        krylov_propagate(h, psi, t, h.norm_bound(), PROPAGATION_TOL)
    };
    Ok(QuantumState::from_parts(h.basis().clone(), StateData::Pure(out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::fermion::{build_fermion_basis, hubbard_terms, LatticeSpec};
    use crate::qsim::operator::{assemble_operator, Term};
    use crate::qsim::state::Basis;
    use crate::qsim::measure::expectation;

    fn hubbard(r: usize, c: usize, nu: usize, nd: usize, j: f64, u: f64) -> OperatorMatrix {
        let lat = LatticeSpec::new(r, c, nu, nd).unwrap();
        let b = Basis::fermion(build_fermion_basis(&lat).unwrap());
        let terms: Vec<Term> = hubbard_terms(&lat, j, u).into_iter().map(Term::from).collect();
        assemble_operator(&terms, &b).unwrap()
    }

    #[test]
    fn diagonal_ground_state() {
        let h = OperatorMatrix::diagonal(Basis::Generic(2), &[0.0, 5.0]).unwrap();
        let (e, s) = ground_state(&h).unwrap();
        assert_eq!(e, 0.0);
        assert!((s.amplitudes().unwrap()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_site_hubbard_energy() {
        let (e, _) = ground_state(&hubbard(1, 2, 1, 1, 1.0, 8.0)).unwrap();
        let exact = (8.0 - libm::sqrt(64.0 + 16.0)) / 2.0;
        assert!((e - exact).abs() < 1e-12);
        assert!((e + 0.472_135_95).abs() < 1e-8);
    }

    #[test]
    fn thermal_limits() {
        let h = hubbard(2, 2, 1, 1, 1.0, 4.0);
        let r0 = thermal_state(&h, 0.0).unwrap();
        let d = h.dim() as f64;
        assert!((r0.purity() - 1.0 / d).abs() < 1e-12);
        let (_, g) = ground_state(&h).unwrap();
        let cold = thermal_state(&h, 1e3).unwrap();
        assert!(cold.overlap(&g).unwrap() > 0.999);
    }

    #[test]
    fn evolution_conserves_norm_and_energy() {
        let h = hubbard(2, 2, 2, 1, 1.0, 3.0);
        let s0 = QuantumState::random_pure(h.basis().clone(), crate::rng::Seed(9));
        let e0 = expectation(&s0, &h).unwrap().re;
        let s1 = time_evolve(&s0, &h, 1.3).unwrap();
        assert!((norm(s1.amplitudes().unwrap()) - 1.0).abs() < 1e-9);
        assert!((expectation(&s1, &h).unwrap().re - e0).abs() < 1e-7);
        let half = time_evolve(&time_evolve(&s0, &h, 0.65).unwrap(), &h, 0.65).unwrap();
        let diff: f64 = half
            .amplitudes()
            .unwrap()
            .iter()
            .zip(s1.amplitudes().unwrap())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(libm::sqrt(diff) < 1e-7);
        assert_eq!(time_evolve(&s0, &h, 0.0).unwrap(), s0);
    }
}
