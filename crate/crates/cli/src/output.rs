//! Experiment results and their on-disk form.

use std::fs;
use std::io;
use std::path::Path;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::value::RawValue;

/// Seventeen significant digits, so every `f64` reads back bit-identically.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self::with_columns(name, columns.iter().map(|c| c.to_string()).collect())
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Ordered named scalars.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics(pub Vec<(String, f64)>);

impl Metrics {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.0.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl Serialize for Metrics {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, value) in &self.0 {
            let text = if value.is_finite() {
                format_float(*value)
            } else {
                "null".into()
            };
            let raw = RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
            map.serialize_entry(name, &raw)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub config_hash: String,
    pub config: String,
    pub metrics: Metrics,
    pub passed: bool,
    /// Human-readable reasons for each failed check.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub tables: Vec<Table>,
    pub duration_s: f64,
}

#[derive(serde::Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    passed: bool,
    metrics: &'a Metrics,
    failures: &'a [String],
    notes: &'a [String],
    tables: Vec<String>,
    config: &'a str,
    duration_s: f64,
}

impl ResultRecord {
    pub fn summary_json(&self) -> serde_json::Result<String> {
        let summary = Summary {
            experiment: &self.experiment,
            config_hash: &self.config_hash,
            passed: self.passed,
            metrics: &self.metrics,
            failures: &self.failures,
            notes: &self.notes,
            tables: self
                .tables
                .iter()
                .map(|t| format!("{}.csv", t.name))
                .collect(),
            config: &self.config,
            duration_s: self.duration_s,
        };
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes `summary.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for table in &self.tables {
            fs::write(dir.join(format!("{}.csv", table.name)), table.to_csv()?)?;
        }
        fs::write(
            dir.join("summary.json"),
            self.summary_json().map_err(io::Error::other)?,
        )
    }
}
