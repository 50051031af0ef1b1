//! Report serialisation: versioned JSON with sorted keys, or CSV.

use std::io::Write;

use k3hg::Error;
use num_bigint::BigInt;
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "k3hg/1";

/// Output encoding selected by `--format`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Integers are emitted as decimal strings so that no value loses precision.
pub fn int(v: &BigInt) -> Value {
    Value::String(v.to_string())
}

pub fn ints<'a>(vs: impl IntoIterator<Item = &'a BigInt>) -> Value {
    Value::Array(vs.into_iter().map(int).collect())
}

/// Attach the schema tag and the command name to a report body.
pub fn envelope(command: &str, body: Value) -> Value {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("command".into(), json!(command));
    Value::Object(map)
}

/// `{stage, code, detail}` for a library error.
pub fn error_object(err: &Error) -> Value {
    json!({ "stage": err.stage(), "code": err.code(), "detail": err.to_string() })
}

/// Error object for failures detected by the CLI itself.
pub fn cli_error(code: &str, detail: &str) -> Value {
    json!({ "stage": "cli", "code": code, "detail": detail })
}

pub fn emit(out: &mut impl Write, report: &Value, format: Format) -> std::io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)
        }
        Format::Csv => emit_csv(out, report),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// A `results` array of objects becomes a table with one column per key;
/// anything else becomes `key,value` rows.
fn emit_csv(out: &mut impl Write, report: &Value) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let rows = report
        .get("results")
        .and_then(Value::as_array)
        .filter(|r| r.iter().all(Value::is_object));
    match rows {
        Some(rows) if !rows.is_empty() => {
            let mut keys: Vec<&String> = rows
                .iter()
                .flat_map(|r| r.as_object().into_iter().flat_map(Map::keys))
                .collect();
            keys.sort();
            keys.dedup();
            w.write_record(&keys)?;
            for r in rows {
                w.write_record(
                    keys.iter()
                        .map(|k| cell(r.get(k.as_str()).unwrap_or(&Value::Null))),
                )?;
            }
        }
        _ => {
            w.write_record(["key", "value"])?;
            if let Some(map) = report.as_object() {
                for (k, v) in map {
                    w.write_record([k.as_str(), &cell(v)])?;
                }
            }
        }
    }
    w.flush()
}
