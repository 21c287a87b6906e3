//! Report emission. CSV uses '.' decimals and LF endings; reals are rounded
//! to 12 significant digits and magnitudes below 1e-12 print as 0. JSON
//! carries full precision.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

pub fn fmt_real(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.abs() < 1e-12 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn json_real(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// A rectangular result with named columns.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Real(v) => fmt_real(*v),
                })
                .collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        let v = match v {
                            Cell::Int(i) => json!(i),
                            Cell::Real(r) => json_real(*r),
                        };
                        m.insert((*c).to_string(), v);
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

/// Envelope shared by every JSON report.
pub fn envelope(command: &str, seed: u64, params: Value, result: impl Serialize) -> CliResult<String> {
    let result = serde_json::to_value(result).map_err(|e| CliError::Violation(format!("unserializable report: {e}")))?;
    let report = json!({
        "schema": format!("conformal-lab/{command}/1"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "params": params,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&report).expect("json values serialize");
    s.push('\n');
    Ok(s)
}

pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
