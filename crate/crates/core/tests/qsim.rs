use std::f64::consts::FRAC_1_SQRT_2;

use proptest::prelude::*;
use qverify_core::linalg::{hermitian_eigen, CMatrix};
use qverify_core::qsim::fermion::hubbard_terms;
use qverify_core::qsim::*;
use qverify_core::rng::Seed;
use qverify_core::C64;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn sector(rows: usize, cols: usize, up: usize, down: usize) -> Basis {
    Basis::fermion(build_fermion_basis(&LatticeSpec::new(rows, cols, up, down).unwrap()).unwrap())
}

#[test]
fn anticommutator_is_delta() {
    let basis = sector(2, 2, 2, 1);
    let d = basis.dim();
    let modes: Vec<(usize, Spin)> = (0..4).flat_map(|s| Spin::BOTH.map(|sp| (s, sp))).collect();
    for &(i, si) in &modes {
        for &(j, sj) in &modes {
            let one = C64::new(1.0, 0.0);
            let ab = FermionTerm::new(one, vec![Ladder::annihilate(i, si), Ladder::create(j, sj)]);
            let ba = FermionTerm::new(one, vec![Ladder::create(j, sj), Ladder::annihilate(i, si)]);
            let m = assemble_operator(&[ab.into(), ba.into()], &basis).unwrap().to_dense().unwrap();
            let delta = if (i, si) == (j, sj) { 1.0 } else { 0.0 };
            assert!((m - CMatrix::identity(d, d) * re(delta)).norm() < 1e-14, "{i}{si:?} {j}{sj:?}");
        }
    }
}

#[test]
fn hopping_pair_is_hermitian() {
    let basis = sector(2, 3, 2, 2);
    for (i, j) in LatticeSpec::new(2, 3, 2, 2).unwrap().bonds() {
        let [a, b] = FermionTerm::hopping(i, j, Spin::Up, C64::new(0.3, -0.4));
        assert_eq!(a.adjoint(), b);
        let m = assemble_operator(&[a.into(), b.into()], &basis).unwrap();
        assert!(m.is_hermitian());
        assert!(m.hermiticity_defect() < 1e-14);
    }
}

#[test]
fn hubbard_matrix_matches_adjoint() {
    let basis = sector(2, 2, 2, 2);
    let lat = *basis.lattice().unwrap();
    let terms: Vec<Term> = hubbard_terms(&lat, 1.0, 8.0).into_iter().map(Term::from).collect();
    let h = assemble_operator(&terms, &basis).unwrap();
    let dense = h.to_dense().unwrap();
    assert!((dense.adjoint() - &dense).norm() < 1e-13);
    let (e, gs) = ground_state(&h).unwrap();
    let ev = hermitian_eigen(&dense).values[0];
    assert!((e - ev).abs() < 1e-10);
    assert!((expectation(&gs, &h).unwrap().re - e).abs() < 1e-10);
}

#[test]
fn partial_traces_compose() {
    let s = QuantumState::random_mixed(Basis::qubits(4).unwrap(), 3, Seed(2)).unwrap();
    let direct = reduced_density(&s, &[0, 2]).unwrap();
    let step = reduced_density(&s, &[0, 1, 2]).unwrap();
    let twice = reduced_density(&step, &[0, 2]).unwrap();
    assert!((direct.density() - twice.density()).norm() < 1e-14);
    let tr: f64 = direct.probabilities().iter().sum();
    assert!((tr - 1.0).abs() < 1e-14);
    assert!(reduced_density(&s, &[1, 1]).is_err());
    assert!(reduced_density(&s, &[4]).is_err());
}

#[test]
fn plus_state_sampling() {
    let plus = QuantumState::product(&[[re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]]).unwrap();
    let n = 100_000u64;
    let counts = sample_bitstrings(&plus, n, Seed(1)).unwrap();
    let ones = counts.iter().filter(|(b, _)| b.bit(0)).map(|(_, c)| *c).sum::<u64>();
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((ones as f64 - n as f64 / 2.0).abs() < 5.0 * sigma);
}

#[test]
fn three_qubit_sampling_chi_square() {
    let s = QuantumState::random_pure(Basis::qubits(3).unwrap(), Seed(7));
    let p = s.probabilities();
    let n = 200_000u64;
    let counts = sample_bitstrings(&s, n, Seed(8)).unwrap();
    let chi2: f64 = (0..8)
        .map(|i| {
            let o = counts.get(&Bitstring::new(3, i as u64).unwrap()).copied().unwrap_or(0) as f64;
            let e = p[i] * n as f64;
            (o - e) * (o - e) / e
        })
        .sum();
    // 7 degrees of freedom, 99.9% quantile ~24.3
    assert!(chi2 < 24.3, "chi2 = {chi2}");
}

#[test]
fn sampled_observable_matches_expectation() {
    let basis = Basis::Generic(6);
    let mut m = CMatrix::zeros(6, 6);
    let v = qverify_core::linalg::random_unit_vector(36, Seed(3));
    for r in 0..6 {
        for c in 0..6 {
            m[(r, c)] = v[6 * r + c] + v[6 * c + r].conj();
        }
    }
    let op = OperatorMatrix::from_dense(basis.clone(), &m, 0.0).unwrap();
    let s = QuantumState::random_mixed(basis, 2, Seed(4)).unwrap();
    let exact = expectation(&s, &op).unwrap().re;
    let dist = BornDistribution::new(&s, &op).unwrap();
    assert!((dist.mean() - exact).abs() < 1e-12);
    let shots = 1_000_000;
    let (mean, var) = sample_observable(&s, &op, shots, Seed(5)).unwrap();
    assert!((mean - exact).abs() < 5.0 * (var / shots as f64).sqrt());
}

#[test]
fn eigenstate_has_zero_variance() {
    let z = OperatorMatrix::diagonal(Basis::qubits(2).unwrap(), &[1.0, -1.0, -1.0, 1.0]).unwrap();
    let s = QuantumState::basis_state(Basis::qubits(2).unwrap(), 1).unwrap();
    let (mean, var) = sample_observable(&s, &z, 1000, Seed(1)).unwrap();
    assert_eq!((mean, var), (-1.0, 0.0));
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn mat(m: &Mat2) -> CMatrix {
    CMatrix::from_fn(2, 2, |r, c| m[r][c])
}

#[test]
fn local_unitaries_match_kronecker_product() {
    let s = QuantumState::random_mixed(Basis::qubits(3).unwrap(), 2, Seed(9)).unwrap();
    let table = qverify_core::randmeas::clifford_table();
    let gates = [table[5], table[11], table[17]];
    let u = kron(&kron(&mat(&gates[0]), &mat(&gates[1])), &mat(&gates[2]));
    let want = &u * s.density() * u.adjoint();
    let got = apply_local_unitaries(&s, &gates).unwrap();
    assert!((got.density() - want).norm() < 1e-13);
    let bad = [[re(1.0), re(1.0)], [re(0.0), re(1.0)]];
    assert!(apply_local_unitaries(&s, &[bad, table[0], table[0]]).is_err());
}

#[test]
fn thermal_state_commutes_with_hamiltonian() {
    let basis = sector(2, 2, 1, 1);
    let lat = *basis.lattice().unwrap();
    let terms: Vec<Term> = hubbard_terms(&lat, 1.0, 4.0).into_iter().map(Term::from).collect();
    let h = assemble_operator(&terms, &basis).unwrap();
    let rho = thermal_state(&h, 0.7).unwrap().density();
    let hd = h.to_dense().unwrap();
    assert!((&hd * &rho - &rho * &hd).norm() < 1e-12);
}

#[test]
fn sampling_is_deterministic() {
    let s = QuantumState::ghz(4).unwrap();
    assert_eq!(sample_bitstrings(&s, 999, Seed(3)).unwrap(), sample_bitstrings(&s, 999, Seed(3)).unwrap());
    assert_ne!(sample_bitstrings(&s, 999, Seed(3)).unwrap(), sample_bitstrings(&s, 999, Seed(4)).unwrap());
}

#[test]
fn time_evolution_preserves_energy() {
    let basis = sector(2, 2, 2, 1);
    let lat = *basis.lattice().unwrap();
    let terms: Vec<Term> = hubbard_terms(&lat, 1.0, 8.0).into_iter().map(Term::from).collect();
    let h = assemble_operator(&terms, &basis).unwrap();
    let s = QuantumState::random_pure(basis, Seed(6));
    let e0 = expectation(&s, &h).unwrap().re;
    let t = time_evolve(&s, &h, 1.3).unwrap();
    assert!((expectation(&t, &h).unwrap().re - e0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bitstring_roundtrip(len in 1usize..40, raw in any::<u64>()) {
        let b = Bitstring::new(len, raw & ((1u64 << len) - 1)).unwrap();
        let parsed: Bitstring = b.to_string().parse().unwrap();
        prop_assert_eq!(parsed, b);
    }

    #[test]
    fn pauli_expectation_bounded(seed in any::<u64>(), label in "[IXYZ]{3}") {
        let s = QuantumState::random_pure(Basis::qubits(3).unwrap(), Seed(seed));
        let op = assemble_operator(&[PauliTerm::parse(1.0, &label).unwrap().into()], &Basis::qubits(3).unwrap()).unwrap();
        let e = expectation(&s, &op).unwrap();
        prop_assert!(e.re.abs() <= 1.0 + 1e-12 && e.im.abs() < 1e-12);
    }
}
