use nalgebra::DMatrix;
use qverify_core::hamlearn::*;
use qverify_core::linalg::CMatrix;
use qverify_core::qsim::fermion::hubbard_terms;
use qverify_core::qsim::*;
use qverify_core::rng::Seed;
use qverify_core::stats::{linear_fit, mean};
use qverify_core::C64;

fn sector(r: usize, c: usize, nu: usize, nd: usize) -> (LatticeSpec, Basis) {
    let lat = LatticeSpec::new(r, c, nu, nd).unwrap();
    (lat, Basis::fermion(build_fermion_basis(&lat).unwrap()))
}

fn hubbard(lat: &LatticeSpec, b: &Basis, j: f64, u: f64) -> OperatorMatrix {
    let t: Vec<Term> = hubbard_terms(lat, j, u).into_iter().map(Term::from).collect();
    assemble_operator(&t, b).unwrap()
}

fn dense(op: &FermionOperator, b: &Basis) -> CMatrix {
    let t: Vec<Term> = op.terms.iter().cloned().map(Term::from).collect();
    assemble_operator(&t, b).unwrap().to_dense().unwrap()
}

fn all_constraints(lat: &LatticeSpec) -> ConstraintSet {
    ConstraintSet {
        constraints: candidate_constraints(lat)
            .into_iter()
            .map(|label| Constraint {
                label,
                operator: label.operator(),
                dependent: false,
            })
            .collect(),
    }
}

#[test]
fn exact_entries_match_dense_commutators() {
    let (lat, b) = sector(1, 2, 1, 1);
    let (_, psi) = ground_state(&hubbard(&lat, &b, 1.0, 8.0)).unwrap();
    let ob = build_operator_basis(&lat);
    let cs = all_constraints(&lat);
    let k = k_matrix_exact(&psi, &ob, &cs).unwrap();
    let v = psi.amplitudes().unwrap();
    let x = nalgebra::DVector::from_column_slice(v);
    for (n, c) in cs.constraints.iter().enumerate() {
        let a = dense(&c.operator, &b);
        for (m, e) in ob.elements.iter().enumerate() {
            let s = dense(&e.operator, &b);
            let o = (&a * &s - &s * &a) * C64::new(0.0, -1.0);
            let val = x.dotc(&(&o * &x));
            assert!(val.im.abs() < 1e-10);
            assert!((val.re - k.entries[(n, m)]).abs() < 1e-12, "({n},{m})");
        }
    }
}

#[test]
fn stationary_states_annihilate_true_coefficients() {
    for (r, c, nu, nd) in [(1, 2, 1, 1), (2, 2, 2, 1), (2, 2, 2, 2), (2, 3, 2, 2)] {
        let (lat, b) = sector(r, c, nu, nd);
        let h = hubbard(&lat, &b, 1.0, 8.0);
        let ob = build_operator_basis(&lat);
        let truth = ob.hubbard_coefficients(1.0, 8.0);
        let cs = all_constraints(&lat);
        let (_, g) = ground_state(&h).unwrap();
        let th = thermal_state(&h, 0.7).unwrap();
        for s in [g, th] {
            let k = k_matrix_exact(&s, &ob, &cs).unwrap();
            assert!(k.relative_residual(&truth) < 1e-8, "{r}x{c}");
        }
    }
}

#[test]
fn maximally_mixed_gives_zero_k() {
    let (lat, b) = sector(2, 2, 1, 1);
    let s = QuantumState::maximally_mixed(b).unwrap();
    let k = k_matrix_exact(&s, &build_operator_basis(&lat), &all_constraints(&lat)).unwrap();
    assert!(k.entries.amax() < 1e-12);
}

#[test]
fn two_site_selection_finds_two_independent_rows() {
    let (lat, b) = sector(1, 2, 1, 1);
    let (_, psi) = ground_state(&hubbard(&lat, &b, 1.0, 8.0)).unwrap();
    let ob = build_operator_basis(&lat);
    let cs = build_constraints(&psi, &ob, 2, Selection::GreedyRank).unwrap();
    assert_eq!(cs.independent(), 2);
    let k = k_matrix_exact(&psi, &ob, &cs).unwrap();
    let sv = k.entries.singular_values();
    assert!(sv.iter().all(|s| *s > 1e-6));
    assert!(build_constraints(&psi, &ob, 0, Selection::GreedyRank).unwrap().is_empty());
    assert!(matches!(
        build_constraints(&psi, &ob, 50, Selection::GreedyRank),
        Err(qverify_core::Error::ConstraintPoolExhausted { .. })
    ));
}

#[test]
fn unique_recovery_at_full_constraints() {
    let (lat, b) = sector(2, 2, 2, 2);
    let (_, psi) = ground_state(&hubbard(&lat, &b, 1.0, 8.0)).unwrap();
    let ob = build_operator_basis(&lat);
    let cs = build_constraints(&psi, &ob, ob.len(), Selection::GreedyRank).unwrap();
    let r = reconstruct(&k_matrix_exact(&psi, &ob, &cs).unwrap()).unwrap();
    assert!(!r.non_unique);
    assert!(r.singular_values[1] > 1e3 * r.singular_values[0]);
    let truth = ob.hubbard_coefficients(1.0, 8.0);
    assert!(parameter_distance(&truth, &r.coefficients).unwrap() < 1e-8);
}

#[test]
fn reconstruction_is_scale_invariant() {
    let (lat, b) = sector(2, 2, 2, 2);
    let ob = build_operator_basis(&lat);
    let cs = all_constraints(&lat);
    let mut prev: Option<Vec<f64>> = None;
    for scale in [1.0, 3.7, 0.05] {
        let (_, psi) = ground_state(&hubbard(&lat, &b, scale, 8.0 * scale)).unwrap();
        let r = reconstruct(&k_matrix_exact(&psi, &ob, &cs).unwrap()).unwrap();
        if let Some(p) = &prev {
            assert!(parameter_distance(p, &r.coefficients).unwrap() < 1e-9);
        }
        prev = Some(r.coefficients);
    }
}

#[test]
fn smallest_singular_vector_matches_gram_oracle() {
    let mut rng = Seed(11).rng();
    use rand::Rng;
    let k = DMatrix::from_fn(9, 6, |_, _| rng.random::<f64>() - 0.5);
    let r = reconstruct(&KMatrix::from_entries(k.clone()).unwrap()).unwrap();
    // independent oracle: lowest eigenvector of K^T K
    let eig = (k.transpose() * &k).symmetric_eigen();
    let i = eig.eigenvalues.imin();
    let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
    assert!(parameter_distance(&v, &r.coefficients).unwrap() < 1e-10);
    assert!((r.lambda.0 - eig.eigenvalues[i]).abs() < 1e-12);
}

#[test]
fn sampled_k_limits_and_determinism() {
    let (lat, b) = sector(2, 2, 2, 2);
    let (_, psi) = ground_state(&hubbard(&lat, &b, 1.0, 8.0)).unwrap();
    let ob = build_operator_basis(&lat);
    let cs = build_constraints(&psi, &ob, 8, Selection::GreedyRank).unwrap();
    let exact = k_matrix_exact(&psi, &ob, &cs).unwrap();
    let g = k_matrix_sampled(&psi, &ob, &cs, u64::MAX, Seed(1), SamplingMode::Gaussian).unwrap();
    assert!((&g.entries - &exact.entries).amax() < 1e-8);
    assert_eq!(g.mode, SamplingMode::Gaussian);
    let a = k_matrix_sampled(&psi, &ob, &cs, 100, Seed(7), SamplingMode::Auto).unwrap();
    let b2 = k_matrix_sampled(&psi, &ob, &cs, 100, Seed(7), SamplingMode::Auto).unwrap();
    assert_eq!(a, b2);
    assert_eq!(a.mode, SamplingMode::Born);
    let model = SampledKModel::new(&psi, &ob, &cs, SamplingMode::Born).unwrap();
    assert!((&model.mean().unwrap().entries - &exact.entries).amax() < 1e-10);
}

#[test]
fn born_entry_error_follows_shot_noise() {
    let (lat, b) = sector(2, 2, 2, 2);
    let (_, psi) = ground_state(&hubbard(&lat, &b, 1.0, 8.0)).unwrap();
    let ob = build_operator_basis(&lat);
    let cs = build_constraints(&psi, &ob, 6, Selection::GreedyRank).unwrap();
    let exact = k_matrix_exact(&psi, &ob, &cs).unwrap();
    let model = SampledKModel::new(&psi, &ob, &cs, SamplingMode::Born).unwrap();
    let shots = [100u64, 316, 1000];
    let mut xs = vec![];
    let mut ys = vec![];
    for &s in &shots {
        let rms: Vec<f64> = (0..30)
            .map(|seed| {
                let k = model.sample(s, Seed(seed).split(s)).unwrap();
                let d = &k.entries - &exact.entries;
                (d.norm_squared() / d.len() as f64).sqrt()
            })
            .collect();
        xs.push((s as f64).ln());
        ys.push(mean(&rms).ln());
    }
    let fit = linear_fit(&xs, &ys);
    assert!((fit.slope + 0.5).abs() < 0.1, "slope {}", fit.slope);
}

#[test]
fn exact_curve_is_monotone_and_exact_at_the_end() {
    let (lat, b) = sector(2, 3, 2, 2);
    let (_, psi) = ground_state(&hubbard(&lat, &b, 1.0, 8.0)).unwrap();
    let ob = build_operator_basis(&lat);
    let m = ob.len();
    let cs = build_constraints(&psi, &ob, m, Selection::GreedyRank).unwrap();
    let truth = ob.hubbard_coefficients(1.0, 8.0);
    let spec = CurveSpec {
        control: Control::Constraints((m / 4..=m).collect()),
        shots: None,
        seeds: (0..5).collect(),
        mode: SamplingMode::Exact,
    };
    let curve = learning_curve(&psi, &ob, &cs, &truth, &spec).unwrap();
    for w in curve.rows.windows(2) {
        assert!(w[1].median_distance <= w[0].median_distance + 1e-12);
    }
    assert!(curve.rows.last().unwrap().median_distance < 1e-8);
    let one = CurveSpec {
        control: Control::Constraints(vec![m]),
        shots: None,
        seeds: vec![3],
        mode: SamplingMode::Exact,
    };
    let c = learning_curve(&psi, &ob, &cs, &truth, &one).unwrap();
    assert_eq!(c.rows.len(), 1);
    assert_eq!(c.to_csv().lines().count(), 2);
}
