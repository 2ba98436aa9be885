//! Dataset and instance files, and atomic output writes.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use qverify_core::qsim::{Bitstring, Counts, PauliTerm};
use qverify_core::randmeas::{Ensemble, LocalUnitary, MeasurementSetting, Provenance, RandMeasDataset};
use qverify_core::verify::HamiltonianInstance;
use qverify_core::C64;
use serde_json::{json, Map, Value};

use crate::canonical::{check_seal, float, seal};
use crate::error::{QvError, QvResult};

pub const DATASET_FORMAT: &str = "qverify-randmeas";
pub const INSTANCE_FORMAT: &str = "qverify-xz-instance";
pub const FORMAT_VERSION: u64 = 1;

/// Writes `contents` to a sibling temp file, syncs it and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> QvResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| QvError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(QvError::io(path, e));
    }
    Ok(())
}

pub fn read_json(path: &Path) -> QvResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| QvError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        QvError::malformed(format!("{}:{}:{}", path.display(), e.line(), e.column()), e.to_string())
    })
}

fn matrix_value(m: &[[C64; 2]; 2]) -> QvResult<Value> {
    let mut entries = Vec::with_capacity(4);
    for row in m {
        for z in row {
            entries.push(Value::Array(vec![float(z.re)?, float(z.im)?]));
        }
    }
    Ok(Value::Array(entries))
}

/// Canonical JSON object for a dataset, without the digest.
pub fn dataset_object(ds: &RandMeasDataset) -> QvResult<Map<String, Value>> {
    ds.validate()?;
    let mut settings = Vec::with_capacity(ds.settings.len());
    for s in &ds.settings {
        let us = s
            .unitaries
            .iter()
            .map(|u| match u {
                LocalUnitary::Clifford(i) => Ok(json!(i)),
                LocalUnitary::Explicit(m) => matrix_value(m),
            })
            .collect::<QvResult<Vec<_>>>()?;
        settings.push(json!({"id": s.id, "unitaries": us}));
    }
    let counts: Vec<Value> = ds
        .counts
        .iter()
        .map(|c| Value::Array(c.iter().map(|(b, n)| json!([b.to_string(), n])).collect()))
        .collect();
    let provenance = match &ds.provenance {
        Some(p) => json!({"seed": p.seed, "rng": p.algorithm}),
        None => Value::Null,
    };
    let v = json!({
        "format": DATASET_FORMAT,
        "version": FORMAT_VERSION,
        "device": ds.device,
        "state": ds.state_label,
        "n_qubits": ds.n_qubits,
        "ensemble": ds.ensemble.name(),
        "shots": ds.shots,
        "settings": settings,
        "counts": counts,
        "provenance": provenance,
    });
    Ok(v.as_object().expect("object").clone())
}

/// Canonical text (digest included) and digest of a dataset.
pub fn dataset_to_string(ds: &RandMeasDataset) -> QvResult<(String, String)> {
    Ok(seal(dataset_object(ds)?))
}

pub fn write_dataset(path: &Path, ds: &RandMeasDataset) -> QvResult<String> {
    let (text, d) = dataset_to_string(ds)?;
    write_atomic(path, text.as_bytes())?;
    Ok(d)
}

struct Fields<'a> {
    obj: &'a Map<String, Value>,
    at: String,
}

impl<'a> Fields<'a> {
    fn new(v: &'a Value, at: impl Into<String>) -> QvResult<Self> {
        let at = at.into();
        let obj = v.as_object().ok_or_else(|| QvError::malformed(&at, "expected an object"))?;
        Ok(Fields { obj, at })
    }

    fn loc(&self, key: &str) -> String {
        format!("{}.{key}", self.at)
    }

    fn get(&self, key: &str) -> QvResult<&'a Value> {
        self.obj.get(key).ok_or_else(|| QvError::malformed(self.loc(key), "missing field"))
    }

    fn str(&self, key: &str) -> QvResult<&'a str> {
        self.get(key)?.as_str().ok_or_else(|| QvError::malformed(self.loc(key), "expected a string"))
    }

    fn u64(&self, key: &str) -> QvResult<u64> {
        self.get(key)?
            .as_u64()
            .ok_or_else(|| QvError::malformed(self.loc(key), "expected a non-negative integer"))
    }

    fn f64(&self, key: &str) -> QvResult<f64> {
        self.get(key)?.as_f64().ok_or_else(|| QvError::malformed(self.loc(key), "expected a number"))
    }

    fn array(&self, key: &str) -> QvResult<&'a Vec<Value>> {
        self.get(key)?.as_array().ok_or_else(|| QvError::malformed(self.loc(key), "expected an array"))
    }
}

fn check_header(f: &Fields<'_>, format: &str) -> QvResult<()> {
    let found = f.str("format")?;
    if found != format {
        return Err(QvError::malformed(f.loc("format"), format!("expected {format:?}, found {found:?}")));
    }
    let version = f.u64("version")?;
    if version != FORMAT_VERSION {
        return Err(QvError::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn parse_matrix(v: &Value, at: &str) -> QvResult<[[C64; 2]; 2]> {
    let entries = v
        .as_array()
        .filter(|a| a.len() == 4)
        .ok_or_else(|| QvError::malformed(at, "expected 4 [re, im] entries"))?;
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for (k, e) in entries.iter().enumerate() {
        let pair = e
            .as_array()
            .filter(|p| p.len() == 2)
            .and_then(|p| Some((p[0].as_f64()?, p[1].as_f64()?)))
            .ok_or_else(|| QvError::malformed(format!("{at}[{k}]"), "expected [re, im]"))?;
        m[k / 2][k % 2] = C64::new(pair.0, pair.1);
    }
    Ok(m)
}

/// Parses and validates a dataset object, returning it with its digest.
pub fn dataset_from_value(v: &Value) -> QvResult<(RandMeasDataset, String)> {
    let f = Fields::new(v, "$")?;
    check_header(&f, DATASET_FORMAT)?;
    let digest = check_seal(f.obj)?;
    let n_qubits = f.u64("n_qubits")? as usize;
    let ensemble: Ensemble = f
        .str("ensemble")?
        .parse()
        .map_err(|e: qverify_core::Error| QvError::malformed(f.loc("ensemble"), e.to_string()))?;
    let mut settings = Vec::new();
    for (i, s) in f.array("settings")?.iter().enumerate() {
        let sf = Fields::new(s, format!("$.settings[{i}]"))?;
        let id = u32::try_from(sf.u64("id")?).map_err(|_| QvError::malformed(sf.loc("id"), "id too large"))?;
        let mut unitaries = Vec::new();
        for (q, u) in sf.array("unitaries")?.iter().enumerate() {
            let at = format!("{}[{q}]", sf.loc("unitaries"));
            let lu = match u.as_u64() {
                Some(k) => LocalUnitary::Clifford(
                    u8::try_from(k).map_err(|_| QvError::malformed(&at, "clifford index too large"))?,
                ),
                None => LocalUnitary::Explicit(parse_matrix(u, &at)?),
            };
            unitaries.push(lu);
        }
        settings.push(MeasurementSetting { id, unitaries });
    }
    let mut counts = Vec::new();
    for (i, c) in f.array("counts")?.iter().enumerate() {
        let at = format!("$.counts[{i}]");
        let entries = c.as_array().ok_or_else(|| QvError::malformed(&at, "expected an array"))?;
        let mut hist = Counts::new();
        for (k, e) in entries.iter().enumerate() {
            let at = format!("{at}[{k}]");
            let (b, n) = e
                .as_array()
                .filter(|p| p.len() == 2)
                .and_then(|p| Some((p[0].as_str()?, p[1].as_u64()?)))
                .ok_or_else(|| QvError::malformed(&at, "expected [bitstring, count]"))?;
            let bits: Bitstring = b.parse().map_err(|e: qverify_core::Error| QvError::malformed(&at, e.to_string()))?;
            if hist.insert(bits, n).is_some() {
                return Err(QvError::malformed(&at, format!("duplicate outcome {b}")));
            }
        }
        counts.push(hist);
    }
    let provenance = match f.get("provenance")? {
        Value::Null => None,
        p => {
            let pf = Fields::new(p, "$.provenance")?;
            Some(Provenance {
                seed: pf.u64("seed")?,
                algorithm: pf.str("rng")?.into(),
            })
        }
    };
    let ds = RandMeasDataset {
        device: f.str("device")?.into(),
        state_label: f.str("state")?.into(),
        n_qubits,
        ensemble,
        settings,
        counts,
        shots: f.u64("shots")?,
        provenance,
    };
    ds.validate().map_err(|e| QvError::malformed("$", e.to_string()))?;
    Ok((ds, digest))
}

pub fn read_dataset(path: &Path) -> QvResult<(RandMeasDataset, String)> {
    dataset_from_value(&read_json(path)?).map_err(|e| match e {
        QvError::Malformed { location, detail } => QvError::Malformed {
            location: format!("{}: {location}", path.display()),
            detail,
        },
        other => other,
    })
}

pub fn instance_object(inst: &HamiltonianInstance) -> QvResult<Map<String, Value>> {
    let terms = inst
        .terms
        .iter()
        .map(|t| Ok(json!({"coefficient": float(t.coefficient)?, "paulis": t.label()})))
        .collect::<QvResult<Vec<_>>>()?;
    let v = json!({
        "format": INSTANCE_FORMAT,
        "version": FORMAT_VERSION,
        "n_qubits": inst.n_qubits,
        "terms": terms,
        "a": float(inst.a)?,
        "b": float(inst.b)?,
    });
    Ok(v.as_object().expect("object").clone())
}

pub fn write_instance(path: &Path, inst: &HamiltonianInstance) -> QvResult<String> {
    let (text, d) = seal(instance_object(inst)?);
    write_atomic(path, text.as_bytes())?;
    Ok(d)
}

pub fn instance_from_value(v: &Value) -> QvResult<HamiltonianInstance> {
    let f = Fields::new(v, "$")?;
    check_header(&f, INSTANCE_FORMAT)?;
    check_seal(f.obj)?;
    let n = f.u64("n_qubits")? as usize;
    let mut terms = Vec::new();
    for (i, t) in f.array("terms")?.iter().enumerate() {
        let tf = Fields::new(t, format!("$.terms[{i}]"))?;
        let term = PauliTerm::parse(tf.f64("coefficient")?, tf.str("paulis")?)
            .map_err(|e| QvError::malformed(tf.loc("paulis"), e.to_string()))?;
        terms.push(term);
    }
    Ok(HamiltonianInstance::new(n, terms, f.f64("a")?, f.f64("b")?)?)
}

pub fn read_instance(path: &Path) -> QvResult<HamiltonianInstance> {
    instance_from_value(&read_json(path)?)
}

/// `dir/name`, creating `dir`.
pub fn output_path(dir: &Path, name: &str) -> QvResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| QvError::io(dir, e))?;
    Ok(dir.join(name))
}
