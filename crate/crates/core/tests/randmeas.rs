use qverify_core::qsim::measure::apply_local_unitaries;
use qverify_core::qsim::*;
use qverify_core::randmeas::*;
use qverify_core::rng::Seed;
use qverify_core::stats::{mean, sample_variance};
use qverify_core::C64;

fn rand_state(n: usize, seed: u64, mixed: bool) -> QuantumState {
    if mixed {
        QuantumState::random_mixed(Basis::Qubits(n), 2, Seed(seed)).unwrap()
    } else {
        QuantumState::random_pure(Basis::Qubits(n), Seed(seed))
    }
}

#[test]
fn clifford_draws_are_uniform() {
    let n_u = 24 * 10_000;
    let s = sample_settings(1, n_u, Ensemble::Clifford, Seed(3)).unwrap();
    let mut freq = [0u64; 24];
    for x in &s {
        match x.unitaries[0] {
            LocalUnitary::Clifford(i) => freq[i as usize] += 1,
            _ => unreachable!(),
        }
    }
    let p = 1.0 / 24.0;
    let sd = (n_u as f64 * p * (1.0 - p)).sqrt();
    for f in freq {
        assert!((f as f64 - n_u as f64 * p).abs() < 5.0 * sd);
    }
    assert_eq!(s, sample_settings(1, n_u, Ensemble::Clifford, Seed(3)).unwrap());
}

#[test]
fn haar_first_moment() {
    let n = 100_000;
    let s = sample_settings(1, n, Ensemble::Haar, Seed(8)).unwrap();
    let xs: Vec<f64> = s
        .iter()
        .map(|x| match x.unitaries[0] {
            LocalUnitary::Explicit(m) => m[0][0].norm_sqr(),
            _ => unreachable!(),
        })
        .collect();
    // |U_00|^2 is uniform on [0, 1] for Haar U(2): variance 1/12
    let se = (1.0f64 / 12.0 / n as f64).sqrt();
    assert!((mean(&xs) - 0.5).abs() < 5.0 * se);
    assert!((sample_variance(&xs) - 1.0 / 12.0).abs() < 0.005);
}

#[test]
fn identity_settings_on_zero_state() {
    let id = MeasurementSetting {
        id: 0,
        unitaries: vec![LocalUnitary::Clifford(0); 3],
    };
    let ds = collect(&QuantumState::zero(3).unwrap(), &[id], 100, Seed(0), "d", "zero").unwrap();
    assert_eq!(ds.counts[0].len(), 1);
    assert_eq!(ds.counts[0][&"000".parse().unwrap()], 100);
    ds.validate().unwrap();
}

#[test]
fn collected_frequencies_pass_chi_square() {
    let s = rand_state(3, 21, false);
    let settings = sample_settings(3, 5, Ensemble::Haar, Seed(1)).unwrap();
    let shots = 20_000u64;
    let ds = collect(&s, &settings, shots, Seed(2), "d", "r").unwrap();
    let table = clifford_table();
    for (set, counts) in settings.iter().zip(&ds.counts) {
        let p = apply_local_unitaries(&s, &set.matrices(&table).unwrap()).unwrap().probabilities();
        let chi2: f64 = p
            .iter()
            .enumerate()
            .map(|(i, &pi)| {
                let o = *counts.get(&Bitstring::new(3, i as u64).unwrap()).unwrap_or(&0) as f64;
                let e = pi * shots as f64;
                (o - e).powi(2) / e
            })
            .sum();
        // 7 degrees of freedom, p ~ 1e-5 cut
        assert!(chi2 < 35.0, "chi2 {chi2}");
    }
}

#[test]
fn exact_enumeration_reproduces_overlap() {
    for k in 0..10 {
        for n_a in [1usize, 2] {
            let a = rand_state(n_a, 100 + k, k % 2 == 0);
            let b = rand_state(n_a, 200 + k, k % 3 == 0);
            let sub: Vec<usize> = (0..n_a).collect();
            let e = exact_mode_overlap(&a, &b, Ensemble::Clifford, &sub, 0, Seed(0)).unwrap();
            assert!((e.value - a.overlap(&b).unwrap()).abs() < 1e-12);
        }
    }
    let mm = QuantumState::maximally_mixed(Basis::Qubits(1)).unwrap();
    let e = exact_mode_overlap(&mm, &mm, Ensemble::Clifford, &[0], 0, Seed(0)).unwrap();
    assert!((e.value - 0.5).abs() < 1e-15);
    let zero = QuantumState::zero(1).unwrap();
    let e = exact_mode_overlap(&zero, &zero, Ensemble::Clifford, &[0], 0, Seed(0)).unwrap();
    assert!((e.value - 1.0).abs() < 1e-15);
}

#[test]
fn haar_monte_carlo_reports_error() {
    let a = rand_state(2, 1, true);
    let b = rand_state(2, 2, true);
    let e = exact_mode_overlap(&a, &b, Ensemble::Haar, &[0, 1], 4000, Seed(5)).unwrap();
    assert!(e.error > 0.0);
    assert!((e.value - a.overlap(&b).unwrap()).abs() < 5.0 * e.error);
}

#[test]
fn marginals_match_reduced_state() {
    let s = rand_state(4, 9, true);
    let table = clifford_table();
    let settings = sample_settings(4, 20, Ensemble::Clifford, Seed(4)).unwrap();
    let sub = [2usize, 0];
    let r = reduced_density(&s, &sub).unwrap();
    for set in &settings {
        let gates = set.matrices(&table).unwrap();
        let full = setting_probabilities(&s, &gates, &sub).unwrap();
        let local = setting_probabilities(&r, &[gates[2], gates[0]], &[0, 1]).unwrap();
        for (x, y) in full.iter().zip(&local) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn fmax_equals_uhlmann_for_a_pure_state() {
    let psi = rand_state(2, 5, false);
    let rho = rand_state(2, 6, true);
    let f = exact_mode_fmax(&psi, &rho, Ensemble::Clifford, &[0, 1], 0, Seed(0)).unwrap();
    let v = psi.amplitudes().unwrap();
    let d = rho.density();
    let mut uhlmann = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            uhlmann += v[i].conj() * d[(i, j)] * v[j];
        }
    }
    assert!((f - uhlmann.re).abs() < 1e-12);
}

#[test]
fn orthogonal_states_have_zero_overlap() {
    let settings = sample_settings(1, 300, Ensemble::Clifford, Seed(1)).unwrap();
    let zero = QuantumState::zero(1).unwrap();
    let one = QuantumState::basis_state(Basis::Qubits(1), 1).unwrap();
    let a = collect(&zero, &settings, 200, Seed(2), "a", "0").unwrap();
    let b = collect(&one, &settings, 200, Seed(3), "b", "1").unwrap();
    let e = estimate_overlap(&a, &b, &[0]).unwrap();
    assert!(e.value.abs() < 5.0 * e.error, "{} ± {}", e.value, e.error);
}

#[test]
fn four_qubit_overlap_within_error() {
    let s1 = rand_state(4, 40, true);
    let s2 = rand_state(4, 41, true);
    let settings = sample_settings(4, 200, Ensemble::Clifford, Seed(10)).unwrap();
    let a = collect(&s1, &settings, 400, Seed(11), "a", "s1").unwrap();
    let b = collect(&s2, &settings, 400, Seed(12), "b", "s2").unwrap();
    let e = estimate_overlap(&a, &b, &[0, 1, 2, 3]).unwrap();
    let exact = s1.overlap(&s2).unwrap();
    assert!((e.value - exact).abs() < 5.0 * e.error);
}

#[test]
fn overlap_estimator_is_unbiased() {
    let s1 = rand_state(2, 50, true);
    let s2 = rand_state(2, 51, true);
    let exact = s1.overlap(&s2).unwrap();
    let vals: Vec<f64> = (0..1000)
        .map(|k| {
            let settings = sample_settings(2, 5, Ensemble::Clifford, Seed(k).split(0)).unwrap();
            let a = collect(&s1, &settings, 10, Seed(k).split(1), "a", "").unwrap();
            let b = collect(&s2, &settings, 10, Seed(k).split(2), "b", "").unwrap();
            estimate_overlap(&a, &b, &[0, 1]).unwrap().value
        })
        .collect();
    let sem = (sample_variance(&vals) / vals.len() as f64).sqrt();
    assert!((mean(&vals) - exact).abs() < 5.0 * sem);
}

#[test]
fn two_shot_purity_is_unbiased() {
    let s = rand_state(2, 60, true);
    let exact = s.purity();
    let vals: Vec<f64> = (0..2000)
        .map(|k| {
            let settings = sample_settings(2, 4, Ensemble::Clifford, Seed(k).split(0)).unwrap();
            let a = collect(&s, &settings, 2, Seed(k).split(1), "a", "").unwrap();
            estimate_purity(&a, &[0, 1]).unwrap().value
        })
        .collect();
    let sem = (sample_variance(&vals) / vals.len() as f64).sqrt();
    assert!((mean(&vals) - exact).abs() < 5.0 * sem);
}

#[test]
fn fmax_symmetry_and_self_comparison() {
    let g = QuantumState::ghz(4).unwrap();
    let settings = sample_settings(4, 100, Ensemble::Clifford, Seed(1)).unwrap();
    let a = collect(&g, &settings, 128, Seed(2), "a", "ghz").unwrap();
    let b = collect(&g, &settings, 128, Seed(3), "b", "ghz").unwrap();
    for sub in [vec![0], vec![1, 3], vec![0, 1, 2, 3]] {
        let ab = estimate_fmax(&a, &b, &sub).unwrap();
        let ba = estimate_fmax(&b, &a, &sub).unwrap();
        assert_eq!(ab.fmax, ba.fmax);
        assert_eq!(ab.fmax_error, ba.fmax_error);
        assert!((ab.fmax - 1.0).abs() < 5.0 * ab.fmax_error);
    }
    assert_eq!(estimate_fmax(&a, &a, &[0, 1, 2, 3]).unwrap().fmax, 1.0);
}

#[test]
fn ghz_with_phase_error_profile() {
    let n = 10;
    let g = QuantumState::ghz(n).unwrap();
    let z = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]];
    let mut gates = vec![clifford_table()[0]; n];
    gates[n - 1] = z;
    let gz = apply_local_unitaries(&g, &gates).unwrap();
    let settings = sample_settings(n, 4000, Ensemble::Clifford, Seed(77)).unwrap();
    let a = collect(&g, &settings, 1000, Seed(78), "a", "ghz").unwrap();
    let b = collect(&gz, &settings, 1000, Seed(79), "b", "ghz-z").unwrap();
    for k in 1..=n {
        let sub: Vec<usize> = (0..k).collect();
        let (_, exact) = dense_fmax(&g, &gz, &sub).unwrap();
        let f = estimate_fmax(&a, &b, &sub).unwrap();
        assert!((f.fmax - exact).abs() < 5.0 * f.fmax_error + 1e-9, "k={k}: {} vs {exact} ± {}", f.fmax, f.fmax_error);
    }
}

#[test]
fn incompatible_datasets_are_rejected() {
    let g = QuantumState::ghz(2).unwrap();
    let s1 = sample_settings(2, 10, Ensemble::Clifford, Seed(1)).unwrap();
    let s2 = sample_settings(2, 10, Ensemble::Clifford, Seed(2)).unwrap();
    let h = sample_settings(2, 10, Ensemble::Haar, Seed(1)).unwrap();
    let a = collect(&g, &s1, 10, Seed(0), "a", "").unwrap();
    let b = collect(&g, &s2, 10, Seed(0), "b", "").unwrap();
    let c = collect(&g, &h, 10, Seed(0), "c", "").unwrap();
    assert!(matches!(estimate_overlap(&a, &b, &[0]), Err(qverify_core::Error::SettingsMismatch { .. })));
    assert!(estimate_overlap(&a, &c, &[0]).is_err());
    let one = collect(&g, &s1, 1, Seed(0), "a", "").unwrap();
    assert!(estimate_purity(&one, &[0]).is_err());
}

#[test]
fn ghz_budget_scaling() {
    let opts = ScalingOptions {
        n_m: 64,
        max_settings: 1 << 14,
        ensemble: Ensemble::Clifford,
        seeds: (0..25).collect(),
    };
    let tab = scaling_probe(&[2, 3, 4, 5, 6], 0.05, QuantumState::ghz, &opts).unwrap();
    assert!(tab.exponent.unwrap() <= 1.2);
    let small = scaling_probe(&[1, 4], 0.05, QuantumState::ghz, &opts).unwrap();
    assert!(small.rows[0].budget < small.rows[1].budget);
    let loose = scaling_probe(&[4], 0.1, QuantumState::ghz, &opts).unwrap();
    assert!(loose.rows[0].budget <= small.rows[1].budget);
}
