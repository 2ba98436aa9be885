//! Canonical JSON and content digests.
//!
//! Canonical text has no whitespace, object keys in byte order, integers
//! verbatim and every other number as `{:.16e}` (17 significant digits).
//! The digest is 64-bit FNV-1a over the canonical UTF-8 bytes, written as the
//! little-endian byte sequence in lowercase hex.

use std::fmt::Write as _;
use std::hash::Hasher as _;

use serde_json::{Map, Number, Value};

use crate::error::{QvError, QvResult};

pub const DIGEST_KEY: &str = "digest";

pub fn canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v);
    out
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, x);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push(':');
                write_value(out, &m[*k]);
            }
            out.push('}');
        }
    }
}

fn write_number(out: &mut String, n: &Number) {
    if let Some(u) = n.as_u64() {
        write!(out, "{u}").unwrap();
    } else if let Some(i) = n.as_i64() {
        write!(out, "{i}").unwrap();
    } else {
        write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN)).unwrap();
    }
}

/// JSON number for a finite float; canonical output always prints it in
/// exponent form so it parses back as a float.
pub fn float(x: f64) -> QvResult<Value> {
    Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| QvError::malformed("number", format!("non-finite value {x}")))
}

pub fn digest(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn digest_hex(d: u64) -> String {
    d.to_le_bytes().iter().fold(String::with_capacity(16), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// Digest of an object with its `digest` field removed.
pub fn content_digest(obj: &Map<String, Value>) -> String {
    let mut body = obj.clone();
    body.remove(DIGEST_KEY);
    digest_hex(digest(canonical_string(&Value::Object(body)).as_bytes()))
}

/// Adds the digest field and returns the canonical text with its digest.
pub fn seal(mut obj: Map<String, Value>) -> (String, String) {
    let d = content_digest(&obj);
    obj.insert(DIGEST_KEY.into(), Value::String(d.clone()));
    (canonical_string(&Value::Object(obj)), d)
}

/// Checks the stated digest against the content and returns it.
pub fn check_seal(obj: &Map<String, Value>) -> QvResult<String> {
    let stated = obj
        .get(DIGEST_KEY)
        .and_then(Value::as_str)
        .ok_or_else(|| QvError::malformed(DIGEST_KEY, "missing or not a string"))?;
    let computed = content_digest(obj);
    if stated != computed {
        return Err(QvError::DigestMismatch {
            stated: stated.into(),
            computed,
        });
    }
    Ok(computed)
}
