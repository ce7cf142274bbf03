//! Canonical JSON emission.
//!
//! Every file this pipeline writes (scenes, routes, configs, dataset rows,
//! manifests) goes through one serializer so that identical inputs produce
//! byte-identical outputs: object keys sorted, floats rounded to 9
//! significant digits, compact separators, `\n` line endings.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Round to 9 significant decimal digits. Idempotent: re-rounding the
/// result returns the same value, which is what makes load/serialize
/// cycles byte-stable.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0; // collapses -0.0
    }
    format!("{x:.8e}").parse().expect("formatted float reparses")
}

fn push_number(out: &mut String, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Dataset(format!("non-finite number {x} in canonical output")));
    }
    let r = round_sig9(x);
    // serde_json's shortest round-trip formatting of the rounded value.
    out.push_str(&serde_json::Number::from_f64(r).expect("finite").to_string());
    Ok(())
}

fn write_value(out: &mut String, v: &Value) -> Result<()> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                push_number(out, n.as_f64().unwrap_or(f64::NAN))?;
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key encodes"));
                out.push(':');
                write_value(out, &map[k])?;
            }
            out.push('}');
        }
    }
    Ok(())
}

/// Canonical compact rendering of a JSON value.
pub fn canonical_json(v: &Value) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, v)?;
    Ok(out)
}

/// Serialize any value to canonical JSON.
pub fn to_canonical_string<T: Serialize>(t: &T) -> Result<String> {
    let v = serde_json::to_value(t)
        .map_err(|e| Error::Dataset(format!("serialization failed: {e}")))?;
    canonical_json(&v)
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}
