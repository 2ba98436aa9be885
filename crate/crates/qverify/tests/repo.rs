use std::path::{Path, PathBuf};

use qverify::canonical::seal;
use qverify::files::{
    dataset_object, dataset_to_string, read_dataset, read_instance, write_atomic, write_dataset, write_instance,
};
use qverify::repo::Repository;
use qverify::states::parse_state;
use qverify::QvError;
use qverify_core::qsim::PauliTerm;
use qverify_core::randmeas::{collect, sample_settings, Ensemble, RandMeasDataset};
use qverify_core::rng::Seed;
use qverify_core::verify::{Circuit, HamiltonianInstance};
use serde_json::{json, Value};

fn dataset(spec: &str, n_u: usize, n_m: u64, ensemble: Ensemble, settings_seed: u64, seed: u64, device: &str) -> RandMeasDataset {
    let state = parse_state(spec).unwrap();
    let n = state.basis().n_qubits().unwrap();
    let settings = sample_settings(n, n_u, ensemble, Seed(settings_seed)).unwrap();
    collect(&state, &settings, n_m, Seed(seed), device, spec).unwrap()
}

fn write(dir: &Path, name: &str, ds: &RandMeasDataset) -> PathBuf {
    let p = dir.join(name);
    write_dataset(&p, ds).unwrap();
    p
}

fn write_value(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    write_atomic(&p, serde_json::to_string(v).unwrap().as_bytes()).unwrap();
    p
}

fn resealed(ds: &RandMeasDataset, edit: impl FnOnce(&mut serde_json::Map<String, Value>)) -> Value {
    let mut obj = dataset_object(ds).unwrap();
    edit(&mut obj);
    obj.remove("digest");
    let (text, _) = seal(obj);
    serde_json::from_str(&text).unwrap()
}

#[test]
fn one_qubit_dataset_is_ingested_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let ds = dataset("plus:1", 10, 20, Ensemble::Clifford, 1, 2, "dev");
    let path = write(dir.path(), "plus.json", &ds);
    let id = repo.ingest(&path).unwrap();
    assert_eq!(id.len(), 16);
    let index = repo.index().unwrap();
    assert_eq!(index.len(), 1);
    assert_eq!(index[&id].device, "dev");
    assert_eq!(index[&id].n_qubits, 1);
    assert_eq!(repo.load(&id).unwrap(), ds);
}

#[test]
fn reingest_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let path = write(dir.path(), "d.json", &dataset("ghz:2", 10, 20, Ensemble::Clifford, 1, 2, "d"));
    let a = repo.ingest(&path).unwrap();
    let log_len = repo.log().unwrap().len();
    let b = repo.ingest(&path).unwrap();
    assert_eq!(a, b);
    assert_eq!(repo.index().unwrap().len(), 1);
    assert_eq!(repo.log().unwrap().len(), log_len);
}

#[test]
fn count_sum_mismatch_names_the_setting() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let ds = dataset("ghz:2", 6, 20, Ensemble::Clifford, 1, 2, "d");
    let v = resealed(&ds, |obj| {
        let entry = &mut obj.get_mut("counts").unwrap()[3][0][1];
        *entry = json!(entry.as_u64().unwrap() + 1);
    });
    let path = write_value(dir.path(), "bad.json", &v);
    let err = repo.ingest(&path).unwrap_err();
    assert!(matches!(err, QvError::Malformed { .. }), "{err}");
    assert!(err.to_string().contains("setting 3"), "{err}");
    assert!(repo.index().unwrap().is_empty());
}

#[test]
fn tampering_without_resealing_is_a_digest_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let ds = dataset("ghz:2", 4, 10, Ensemble::Clifford, 1, 2, "d");
    let (text, _) = dataset_to_string(&ds).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["device"] = json!("someone-else");
    let path = write_value(dir.path(), "t.json", &v);
    let err = repo.ingest(&path).unwrap_err();
    assert!(matches!(err, QvError::DigestMismatch { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn unsupported_version_and_malformed_fields_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset("ghz:2", 4, 10, Ensemble::Clifford, 1, 2, "d");
    let v = resealed(&ds, |obj| {
        obj.insert("version".into(), json!(99));
    });
    let err = read_dataset(&write_value(dir.path(), "v.json", &v)).unwrap_err();
    assert!(matches!(err, QvError::UnsupportedVersion { found: 99, .. }), "{err}");

    let v = resealed(&ds, |obj| {
        obj.get_mut("settings").unwrap()[2]["unitaries"][1] = json!("h");
    });
    let err = read_dataset(&write_value(dir.path(), "m.json", &v)).unwrap_err();
    match &err {
        QvError::Malformed { location, .. } => assert!(location.contains("$.settings[2].unitaries[1]"), "{location}"),
        other => panic!("{other}"),
    }

    let err = read_dataset(&dir.path().join("missing.json")).unwrap_err();
    assert!(matches!(err, QvError::Io { .. }));
}

#[test]
fn dataset_file_roundtrip_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    for ens in [Ensemble::Clifford, Ensemble::Haar] {
        let ds = dataset("random:3:4", 8, 30, ens, 5, 6, "d");
        let p = write(dir.path(), "r.json", &ds);
        let (back, digest) = read_dataset(&p).unwrap();
        assert_eq!(back.counts, ds.counts);
        let (text, again) = dataset_to_string(&back).unwrap();
        assert_eq!(again, digest);
        assert_eq!(text.as_bytes(), std::fs::read(&p).unwrap().as_slice());
    }
}

#[test]
fn self_comparison_is_exactly_one_and_comparison_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let a = repo.ingest_dataset(&dataset("mixed:3:2:1", 40, 50, Ensemble::Clifford, 9, 1, "a")).unwrap();
    let b = repo.ingest_dataset(&dataset("mixed:3:2:1", 40, 50, Ensemble::Clifford, 9, 2, "b")).unwrap();
    assert_eq!(repo.compare(&a, &a, None).unwrap().fmax, 1.0);
    let ab = repo.compare(&a, &b, None).unwrap();
    let ba = repo.compare(&b, &a, None).unwrap();
    assert!((ab.fmax - ba.fmax).abs() <= 1e-15 * ab.fmax.abs().max(1.0));
    let sub = [0, 2];
    let ab = repo.compare(&a, &b, Some(&sub)).unwrap();
    let ba = repo.compare(&b, &a, Some(&sub)).unwrap();
    assert!((ab.fmax - ba.fmax).abs() <= 1e-15);
    assert!(repo.log().unwrap().iter().filter(|r| r["op"] == "compare").count() >= 5);
}

#[test]
fn independent_collections_of_one_state_agree() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let a = repo.ingest_dataset(&dataset("random:3:11", 300, 200, Ensemble::Clifford, 3, 1, "a")).unwrap();
    let b = repo.ingest_dataset(&dataset("random:3:11", 300, 200, Ensemble::Clifford, 3, 2, "b")).unwrap();
    let f = repo.compare(&a, &b, None).unwrap();
    assert!((f.fmax - 1.0).abs() <= 5.0 * f.fmax_error, "{} +- {}", f.fmax, f.fmax_error);
}

#[test]
fn incompatible_datasets_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let a = repo.ingest_dataset(&dataset("ghz:2", 10, 10, Ensemble::Clifford, 3, 1, "a")).unwrap();
    let h = repo.ingest_dataset(&dataset("ghz:2", 10, 10, Ensemble::Haar, 3, 1, "h")).unwrap();
    let err = repo.compare(&a, &h, None).unwrap_err();
    assert!(err.to_string().contains("ensembles differ"), "{err}");
    let other = repo.ingest_dataset(&dataset("ghz:2", 10, 10, Ensemble::Clifford, 4, 1, "o")).unwrap();
    let err = repo.compare(&a, &other, None).unwrap_err();
    assert!(err.to_string().contains("setting 0"), "{err}");
    assert!(matches!(repo.compare(&a, "0000000000000000", None), Err(QvError::UnknownDataset(_))));
}

#[test]
fn matrix_has_block_structure() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let single = repo.ingest_dataset(&dataset("ghz:3", 50, 100, Ensemble::Clifford, 7, 1, "a")).unwrap();
    let m = repo.compare_matrix(std::slice::from_ref(&single), None).unwrap();
    assert_eq!(m.values, vec![vec![Some(1.0)]]);

    let ids: Vec<String> = [("ghz:3", 1, "a"), ("ghz:3", 2, "b"), ("ghzm:3", 3, "c")]
        .iter()
        .map(|(s, seed, d)| repo.ingest_dataset(&dataset(s, 400, 200, Ensemble::Clifford, 7, *seed, d)).unwrap())
        .collect();
    let m = repo.compare_matrix(&ids, None).unwrap();
    assert!(m.failures.is_empty());
    let v = |i: usize, j: usize| m.values[i][j].unwrap();
    let e = |i: usize, j: usize| m.errors[i][j].unwrap();
    for i in 0..3 {
        assert_eq!(v(i, i), 1.0);
        for j in 0..3 {
            assert_eq!(v(i, j).to_bits(), v(j, i).to_bits());
        }
    }
    assert!((v(0, 1) - 1.0).abs() <= 5.0 * e(0, 1));
    assert!(v(0, 2).abs() <= 5.0 * e(0, 2));
    assert!(v(1, 2).abs() <= 5.0 * e(1, 2));
    let csv = m.to_csv();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn log_replays_to_the_index_and_order_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let sets: Vec<RandMeasDataset> =
        (0..3).map(|k| dataset("random:2:5", 20, 30, Ensemble::Clifford, 2, k, &format!("d{k}"))).collect();
    let r1 = Repository::open(dir.path().join("r1")).unwrap();
    let r2 = Repository::open(dir.path().join("r2")).unwrap();
    let ids1: Vec<String> = sets.iter().map(|d| r1.ingest_dataset(d).unwrap()).collect();
    let ids2: Vec<String> = sets.iter().rev().map(|d| r2.ingest_dataset(d).unwrap()).collect();
    assert_eq!(r1.replay_log().unwrap(), r1.index().unwrap());
    assert_eq!(r1.index().unwrap(), r2.index().unwrap());
    let f1 = r1.compare(&ids1[0], &ids1[1], None).unwrap();
    let f2 = r2.compare(&ids2[2], &ids2[1], None).unwrap();
    assert_eq!(f1.fmax.to_bits(), f2.fmax.to_bits());
    assert_eq!(r1.check().unwrap(), 3);
}

#[test]
fn corrupted_stored_file_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path().join("repo")).unwrap();
    let id = repo.ingest_dataset(&dataset("ghz:2", 5, 10, Ensemble::Clifford, 1, 1, "d")).unwrap();
    let file = repo.root().join(format!("datasets/{id}.json"));
    let text = std::fs::read_to_string(&file).unwrap().replace("\"device\":\"d\"", "\"device\":\"x\"");
    std::fs::write(&file, text).unwrap();
    assert!(matches!(repo.check(), Err(QvError::DigestMismatch { .. })));
}

#[test]
fn instance_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = HamiltonianInstance::from_circuit(&Circuit::minimal()).unwrap();
    let p = dir.path().join("i.json");
    let d1 = write_instance(&p, &inst).unwrap();
    let back = read_instance(&p).unwrap();
    assert_eq!(back.n_qubits, inst.n_qubits);
    assert_eq!(back.a.to_bits(), inst.a.to_bits());
    assert_eq!(back.b.to_bits(), inst.b.to_bits());
    assert_eq!(back.terms, inst.terms);
    assert_eq!(write_instance(&p, &back).unwrap(), d1);

    let bad = HamiltonianInstance::new(1, vec![PauliTerm::parse(1.0, "Y").unwrap()], 0.0, 1.0);
    assert!(bad.is_err());
}
