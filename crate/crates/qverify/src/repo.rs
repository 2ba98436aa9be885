//! File-based dataset repository.
//!
//! Layout under the root:
//! `index.json` (canonical, id -> file and summary), `log.jsonl`
//! (append-only, one canonical JSON object per line), `datasets/<id>.json`,
//! and `.lock`, held exclusively by writers.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use qverify_core::randmeas::{estimate_fmax, FidelityEstimate, RandMeasDataset};
use serde_json::{json, Map, Value};

use crate::canonical::{canonical_string, float};
use crate::error::{QvError, QvResult};
use crate::files::{dataset_to_string, read_dataset, read_json, write_atomic};

/// Environment variable naming the repository root.
pub const REPO_ENV: &str = "QVERIFY_REPO";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexEntry {
    pub file: String,
    pub device: String,
    pub state: String,
    pub n_qubits: u64,
    pub ensemble: String,
    pub settings: u64,
    pub shots: u64,
}

impl IndexEntry {
    fn of(ds: &RandMeasDataset, file: String) -> Self {
        IndexEntry {
            file,
            device: ds.device.clone(),
            state: ds.state_label.clone(),
            n_qubits: ds.n_qubits as u64,
            ensemble: ds.ensemble.name().into(),
            settings: ds.settings.len() as u64,
            shots: ds.shots,
        }
    }

    pub fn to_value(&self) -> Value {
        json!({
            "file": self.file, "device": self.device, "state": self.state,
            "n_qubits": self.n_qubits, "ensemble": self.ensemble,
            "settings": self.settings, "shots": self.shots,
        })
    }

    fn from_value(v: &Value, at: &str) -> QvResult<Self> {
        let s = |k: &str| {
            v.get(k)
                .and_then(Value::as_str)
                .map(str::to_owned)
                .ok_or_else(|| QvError::malformed(format!("{at}.{k}"), "expected a string"))
        };
        let u = |k: &str| {
            v.get(k)
                .and_then(Value::as_u64)
                .ok_or_else(|| QvError::malformed(format!("{at}.{k}"), "expected an integer"))
        };
        Ok(IndexEntry {
            file: s("file")?,
            device: s("device")?,
            state: s("state")?,
            n_qubits: u("n_qubits")?,
            ensemble: s("ensemble")?,
            settings: u("settings")?,
            shots: u("shots")?,
        })
    }
}

/// Pairwise comparison matrix; `None` marks a pair that failed.
#[derive(Clone, Debug, PartialEq)]
pub struct FmaxMatrix {
    pub ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub errors: Vec<Vec<Option<f64>>>,
    /// `(i, j, message)` for failed pairs.
    pub failures: Vec<(usize, usize, String)>,
}

impl FmaxMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&self.ids[i]);
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&format!("{v:.12}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug)]
pub struct Repository {
    root: PathBuf,
}

/// Exclusive advisory lock on the repository, released on drop.
#[derive(Debug)]
pub struct RepoLock {
    file: File,
}

impl Drop for RepoLock {
    fn drop(&mut self) {
        let _ = self.file.unlock();
    }
}

pub fn fidelity_value(f: &FidelityEstimate) -> QvResult<Value> {
    Ok(json!({
        "subsystem": f.subsystem,
        "overlap": float(f.overlap)?,
        "overlap_error": float_or_null(f.overlap_error),
        "purity_1": float(f.purity_1)?,
        "purity_1_error": float_or_null(f.purity_1_error),
        "purity_2": float(f.purity_2)?,
        "purity_2_error": float_or_null(f.purity_2_error),
        "fmax": float_or_null(f.fmax),
        "fmax_error": float_or_null(f.fmax_error),
        "reliable": f.reliable,
    }))
}

fn float_or_null(x: f64) -> Value {
    float(x).unwrap_or(Value::Null)
}

impl Repository {
    /// Opens (creating if needed) the repository at `root`.
    pub fn open(root: impl Into<PathBuf>) -> QvResult<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("datasets")).map_err(|e| QvError::io(&root, e))?;
        Ok(Repository { root })
    }

    /// Opens the repository named by `QVERIFY_REPO`.
    pub fn from_env() -> QvResult<Self> {
        match std::env::var_os(REPO_ENV) {
            Some(p) => Self::open(PathBuf::from(p)),
            None => Err(QvError::Config(format!("{REPO_ENV} is not set"))),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    fn log_path(&self) -> PathBuf {
        self.root.join("log.jsonl")
    }

    pub fn lock(&self) -> QvResult<RepoLock> {
        let path = self.root.join(".lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| QvError::io(&path, e))?;
        file.lock().map_err(|e| QvError::io(&path, e))?;
        Ok(RepoLock { file })
    }

    pub fn index(&self) -> QvResult<BTreeMap<String, IndexEntry>> {
        let path = self.index_path();
        if !path.exists() {
            return Ok(BTreeMap::new());
        }
        let v = read_json(&path)?;
        let obj = v
            .get("datasets")
            .and_then(Value::as_object)
            .ok_or_else(|| QvError::malformed("index.datasets", "expected an object"))?;
        obj.iter()
            .map(|(id, e)| Ok((id.clone(), IndexEntry::from_value(e, &format!("index.datasets.{id}"))?)))
            .collect()
    }

    fn write_index(&self, index: &BTreeMap<String, IndexEntry>) -> QvResult<()> {
        let datasets: Map<String, Value> = index.iter().map(|(k, e)| (k.clone(), e.to_value())).collect();
        let text = canonical_string(&json!({ "datasets": datasets }));
        write_atomic(&self.index_path(), text.as_bytes())
    }

    fn append_log(&self, entry: &Value) -> QvResult<()> {
        let path = self.log_path();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| QvError::io(&path, e))?;
        let mut line = canonical_string(entry);
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(|e| QvError::io(&path, e))?;
        f.sync_data().map_err(|e| QvError::io(&path, e))
    }

    pub fn log(&self) -> QvResult<Vec<Value>> {
        let path = self.log_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(|e| QvError::io(&path, e))?;
        text.lines()
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| QvError::malformed(format!("log.jsonl:{}", i + 1), e.to_string())))
            .collect()
    }

    /// Validates the file at `path` and stores it under its digest. Returns
    /// the id; ingesting the same content again changes nothing.
    pub fn ingest(&self, path: &Path) -> QvResult<String> {
        let (ds, id) = read_dataset(path)?;
        self.ingest_dataset(&ds).map(|got| {
            debug_assert_eq!(got, id);
            got
        })
    }

    pub fn ingest_dataset(&self, ds: &RandMeasDataset) -> QvResult<String> {
        let (text, id) = dataset_to_string(ds)?;
        let _lock = self.lock()?;
        let mut index = self.index()?;
        if index.contains_key(&id) {
            return Ok(id);
        }
        let file = format!("datasets/{id}.json");
        write_atomic(&self.root.join(&file), text.as_bytes())?;
        let entry = IndexEntry::of(ds, file);
        self.append_log(&json!({"op": "ingest", "id": id, "entry": entry.to_value()}))?;
        index.insert(id.clone(), entry);
        self.write_index(&index)?;
        Ok(id)
    }

    /// Loads a dataset, re-checking its digest against the id.
    pub fn load(&self, id: &str) -> QvResult<RandMeasDataset> {
        let index = self.index()?;
        let entry = index.get(id).ok_or_else(|| QvError::UnknownDataset(id.into()))?;
        let (ds, digest) = read_dataset(&self.root.join(&entry.file))?;
        if digest != id {
            return Err(QvError::DigestMismatch {
                stated: id.into(),
                computed: digest,
            });
        }
        Ok(ds)
    }

    /// Revalidates every indexed file.
    pub fn check(&self) -> QvResult<usize> {
        let index = self.index()?;
        for id in index.keys() {
            self.load(id)?;
        }
        Ok(index.len())
    }

    /// F_max estimate between two stored datasets on `subsystem` (all qubits
    /// when `None`); the result is logged.
    pub fn compare(&self, a: &str, b: &str, subsystem: Option<&[usize]>) -> QvResult<FidelityEstimate> {
        let (da, db) = (self.load(a)?, self.load(b)?);
        let all: Vec<usize> = (0..da.n_qubits).collect();
        let sub = subsystem.unwrap_or(&all);
        da.check_compatible(&db, sub)?;
        let est = estimate_fmax(&da, &db, sub)?;
        let _lock = self.lock()?;
        self.append_log(&json!({"op": "compare", "a": a, "b": b, "result": fidelity_value(&est)?}))?;
        Ok(est)
    }

    /// Symmetric F_max matrix. Each unordered pair is computed once with the
    /// smaller index first and mirrored; the diagonal compares a dataset
    /// with itself.
    pub fn compare_matrix(&self, ids: &[String], subsystem: Option<&[usize]>) -> QvResult<FmaxMatrix> {
        let n = ids.len();
        let mut values = vec![vec![None; n]; n];
        let mut errors = vec![vec![None; n]; n];
        let mut failures = Vec::new();
        for i in 0..n {
            for j in i..n {
                match self.compare(&ids[i], &ids[j], subsystem) {
                    Ok(e) => {
                        values[i][j] = Some(e.fmax);
                        values[j][i] = Some(e.fmax);
                        errors[i][j] = Some(e.fmax_error);
                        errors[j][i] = Some(e.fmax_error);
                    }
                    Err(e @ QvError::UnknownDataset(_)) => return Err(e),
                    Err(e) => failures.push((i, j, e.to_string())),
                }
            }
        }
        Ok(FmaxMatrix {
            ids: ids.to_vec(),
            values,
            errors,
            failures,
        })
    }

    /// Rebuilds the index from the ingest records of the log.
    pub fn replay_log(&self) -> QvResult<BTreeMap<String, IndexEntry>> {
        let mut index = BTreeMap::new();
        for (i, rec) in self.log()?.iter().enumerate() {
            if rec.get("op").and_then(Value::as_str) == Some("ingest") {
                let at = format!("log.jsonl:{}", i + 1);
                let id = rec
                    .get("id")
                    .and_then(Value::as_str)
                    .ok_or_else(|| QvError::malformed(&at, "ingest record without id"))?;
                let entry = IndexEntry::from_value(rec.get("entry").unwrap_or(&Value::Null), &at)?;
                index.insert(id.to_owned(), entry);
            }
        }
        Ok(index)
    }
}
