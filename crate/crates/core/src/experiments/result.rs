//! Experiment results, tolerance gates and artifact emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::svg::Plot;
use crate::error::{Error, Result};

/// One cell of a result row.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Num(x) if x.is_finite() => format!("{x:?}"),
            Value::Num(x) if x.is_nan() => "nan".into(),
            Value::Num(x) => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Value::Num(x) if x.is_nan() => s.serialize_none(),
            Value::Num(x) => s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" }),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Text(t) => s.serialize_str(t),
            Value::Bool(b) => s.serialize_bool(*b),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

/// A result row: ordered named values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub fields: Vec<(String, Value)>,
}

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.fields.push((name.to_string(), v.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn num(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(Value::as_f64)
    }
}

impl Serialize for Row {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.fields.len()))?;
        for (k, v) in &self.fields {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

/// Comparison of a measured value against a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub description: String,
    #[serde(serialize_with = "finite_or_text")]
    pub measured: f64,
    pub comparison: Comparison,
    pub bound: f64,
    pub pass: bool,
}

fn finite_or_text<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    Value::Num(*v).serialize(s)
}

impl Gate {
    pub fn at_most(name: &str, description: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            measured,
            comparison: Comparison::AtMost,
            bound,
            pass: measured <= bound,
        }
    }

    pub fn at_least(name: &str, description: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            measured,
            comparison: Comparison::AtLeast,
            bound,
            pass: measured >= bound,
        }
    }

    /// A yes/no check reported as `1 ≥ 1` or `0 ≥ 1`.
    pub fn holds(name: &str, description: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, description, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn line(&self) -> String {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        format!(
            "[{}] {}: {} (measured {:.6e} {op} {:.6e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.description,
            self.measured,
            self.bound
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub config_hash: String,
    pub cases: Vec<Row>,
    pub gates: Vec<Gate>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub plots: Vec<Plot>,
    /// Wall-clock seconds per phase; written apart from the reproducible artifacts.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl ExperimentResult {
    pub fn new(experiment: &str, config_hash: &str) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash: config_hash.into(),
            cases: Vec::new(),
            gates: Vec::new(),
            notes: Vec::new(),
            warnings: Vec::new(),
            plots: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    /// Column names in first-appearance order.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for r in &self.cases {
            for (k, _) in &r.fields {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols
    }

    pub fn to_csv(&self) -> Result<String> {
        let cols = self.columns();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["config_hash".to_string()];
        header.extend(cols.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.cases {
            let mut rec = vec![self.config_hash.clone()];
            rec.extend(cols.iter().map(|c| r.get(c).map(Value::csv).unwrap_or_default()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            experiment: &'a str,
            config_hash: &'a str,
            cases: &'a [Row],
            gates: &'a [Gate],
            notes: &'a [String],
            warnings: &'a [String],
            pass: bool,
        }
        let mut s = serde_json::to_string_pretty(&Summary {
            experiment: &self.experiment,
            config_hash: &self.config_hash,
            cases: &self.cases,
            gates: &self.gates,
            notes: &self.notes,
            warnings: &self.warnings,
            pass: self.pass(),
        })?;
        s.push('\n');
        Ok(s)
    }

    pub fn timings_json(&self) -> Result<String> {
        let map: serde_json::Map<String, serde_json::Value> =
            self.timings.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
        let v = serde_json::json!({ "experiment": self.experiment, "config_hash": self.config_hash, "seconds": map });
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }

    /// Human-readable gate summary.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} ({}): {}", self.experiment, &self.config_hash[..12.min(self.config_hash.len())], if self.pass() { "PASS" } else { "FAIL" });
        for g in &self.gates {
            let _ = writeln!(s, "  {}", g.line());
        }
        for w in &self.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Writes `<name>.csv`, `<name>.json`, `<name>_timings.json` and one SVG per plot into `dir`.
pub fn emit_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = &result.experiment;
    let mut written = Vec::new();
    let mut put = |file: String, body: String| -> Result<()> {
        let p = dir.join(file);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put(format!("{name}.csv"), result.to_csv()?)?;
    put(format!("{name}.json"), result.to_json()?)?;
    put(format!("{name}_timings.json"), result.timings_json()?)?;
    for plot in &result.plots {
        put(format!("{name}_{}.svg", plot.id), plot.render(&result.config_hash))?;
    }
    Ok(written)
}
