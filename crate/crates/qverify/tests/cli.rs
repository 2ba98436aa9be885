use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qverify(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qverify"))
        .args(args)
        .current_dir(dir)
        .env_remove("QVERIFY_REPO")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV report, skipping `#` lines and the header.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["verify", "run", "--help"], &["repo", "--help"]] {
        let o = qverify(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn unknown_flag_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = qverify(dir.path(), &["hamlearn", "run", "--lattice", "2x2", "--frobnicate", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--frobnicate"), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[usage]"));
    let o = qverify(dir.path(), &["transmogrify"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn hamlearn_exact_curve_recovers_the_hamiltonian() {
    let dir = tempfile::tempdir().unwrap();
    let o = qverify(
        dir.path(),
        &["hamlearn", "run", "--lattice", "2x2", "--nup", "2", "--ndown", "2", "--shots", "exact", "--out", "c.csv"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.starts_with("# config: {\"hamlearn\""));
    assert!(text.contains("control,median_distance,q25,q75,gap,smallest_singular_value"));
    let all = rows(&text);
    let d: Vec<f64> = all.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(all.len(), 10);
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    let last = all.last().unwrap();
    assert_eq!(last[0], "12");
    let d: f64 = last[1].parse().unwrap();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn degenerate_lattice_is_reported_not_hidden() {
    let dir = tempfile::tempdir().unwrap();
    let o = qverify(dir.path(), &["hamlearn", "run", "--lattice", "1x2", "--nup", "1", "--ndown", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let last = rows(&stdout(&o)).pop().unwrap();
    assert_eq!(last[0], "4");
    assert_eq!(last[4].parse::<f64>().unwrap(), 0.0, "gap column");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let collect = ["randmeas", "collect", "--state", "mixed:3:2:4", "--nu", "30", "--nm", "40", "--seed", "8"];
    let mut first = None;
    for _ in 0..2 {
        let o = qverify(dir.path(), &[&collect[..], &["--out", "d.json"]].concat());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let bytes = fs::read(dir.path().join("d.json")).unwrap();
        if let Some(f) = &first {
            assert_eq!(f, &bytes);
        }
        first = Some(bytes);
    }
    let run = ["hamlearn", "run", "--lattice", "2x2", "--nup", "2", "--ndown", "2", "--shots", "200", "--seeds", "3"];
    let a = stdout(&qverify(dir.path(), &run));
    let b = stdout(&qverify(dir.path(), &run));
    assert_eq!(a, b);
    assert!(a.contains("mode: born"));
}

#[test]
fn failures_leave_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = qverify(dir.path(), &["randmeas", "collect", "--state", "ghz:x", "--out", "d.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qverify(dir.path(), &["verify", "instance", "--terms", "1:XY", "--out", "i.json"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[computation]"));
    let o = qverify(dir.path(), &["verify", "run", "--instance", "missing.json", "--transcripts", "t.jsonl"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(files_in(dir.path()).is_empty(), "{:?}", files_in(dir.path()));
}

#[test]
fn repo_commands_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qverify(dir.path(), &["repo", "list"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("QVERIFY_REPO"));

    for (state, seed, name) in [("ghz:2", "1", "a.json"), ("ghz:2", "2", "b.json")] {
        let o = qverify(
            dir.path(),
            &["randmeas", "collect", "--state", state, "--nu", "50", "--nm", "50", "--seed", seed, "--out", name],
        );
        assert_eq!(o.status.code(), Some(0));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_qverify"))
        .args(["repo", "ingest", "a.json", "b.json"])
        .current_dir(dir.path())
        .env("QVERIFY_REPO", dir.path().join("repo"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ids: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_owned()).collect();

    let o = qverify(dir.path(), &["repo", "--repo", "repo", "list", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"].as_object().unwrap().len(), 2);
    assert_eq!(v["config"]["repo"]["command"]["list"]["report"]["json"], true);

    let o = qverify(dir.path(), &["repo", "--repo", "repo", "matrix", &ids[0], &ids[1], "--out", "m"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("m/matrix.csv")).unwrap();
    let r = rows(&csv);
    assert_eq!(r[0][1], r[1][2]);
    assert_eq!(r[0][1], "1.000000000000");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m/matrix.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["fmax"][0][1], json["report"]["fmax"][1][0]);

    let o = qverify(dir.path(), &["repo", "--repo", "repo", "compare", &ids[0], "ffffffffffffffff"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[unknown-id]"));

    let stored = dir.path().join(format!("repo/datasets/{}.json", ids[0]));
    let text = fs::read_to_string(&stored).unwrap().replacen("\"shots\":50", "\"shots\":51", 1);
    fs::write(&stored, text).unwrap();
    let o = qverify(dir.path(), &["repo", "--repo", "repo", "check"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[digest]"), "{}", stderr(&o));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "seed = 4\n[hamlearn.run]\nlattice = \"2x2\"\nnup = 2\nndown = 2\nconstraints = [6, 12]\n",
    )
    .unwrap();
    let o = qverify(dir.path(), &["--config", "run.toml", "hamlearn", "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("\"seed\":4"));
    assert_eq!(rows(&out).len(), 2);
    let o = qverify(dir.path(), &["--config", "run.toml", "hamlearn", "run", "--constraints", "11"]);
    assert_eq!(rows(&stdout(&o)).len(), 1);

    fs::write(dir.path().join("bad.toml"), "[hamlearn.run]\nlatice = \"2x2\"\n").unwrap();
    let o = qverify(dir.path(), &["--config", "bad.toml", "hamlearn", "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("latice"));
}

#[test]
fn verify_run_accepts_honest_and_rejects_mixed() {
    let dir = tempfile::tempdir().unwrap();
    let o = qverify(dir.path(), &["verify", "instance", "--terms=-1:ZZ,-0.7:XI", "--a=-1.22", "--b=-0.5", "--out", "i.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = qverify(
        dir.path(),
        &["verify", "run", "--instance", "i.json", "--rounds", "4000", "--transcripts", "t.jsonl"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "accept");
    let lines: Vec<serde_json::Value> = fs::read_to_string(dir.path().join("t.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines[0]["config"].is_object());
    assert_eq!(lines.len(), 4001);
    assert!(lines[1..].iter().all(|r| r["passed"] != false));

    let o = qverify(dir.path(), &["verify", "run", "--instance", "i.json", "--rounds", "4000", "--prover", "mixed"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "reject");
}

#[test]
fn verify_delegate_matches_born_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let o = qverify(
        dir.path(),
        &["verify", "delegate", "--state", "0.6,0.8", "--basis", "z", "--rounds", "20000", "--json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["report"];
    let f0 = r["frequencies"][0].as_f64().unwrap();
    let p0 = r["probabilities"][0].as_f64().unwrap();
    assert!((p0 - 0.36).abs() < 1e-12);
    let n = (r["counts"][0].as_u64().unwrap() + r["counts"][1].as_u64().unwrap()) as f64;
    assert!((f0 - p0).abs() < 5.0 * (p0 * (1.0 - p0) / n).sqrt());
    assert_eq!(r["tests"], r["tests_passed"]);
}
