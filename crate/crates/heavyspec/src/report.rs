//! Tabular reports and their metadata sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use heavyspec_core::harness::Verdict;
use heavyspec_core::Config;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::formats::{fmt_f64, write_json, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_f64(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or_else(|| Value::String(fmt_f64(*x)), Value::Number),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| Value::Object(self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect::<Map<_, _>>()))
                .collect(),
        )
    }
}

pub fn verdict_table(verdicts: &[Verdict]) -> Table {
    let mut t = Table::new(&["name", "passed", "value", "threshold", "guard", "detail"]);
    for v in verdicts {
        t.push(vec![v.name.as_str().into(), v.passed.into(), v.value.into(), v.threshold.into(), v.guard.into(), v.detail.as_str().into()]);
    }
    t
}

/// Run metadata written next to every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub seed: u64,
    /// Sub-seeds actually used, by purpose.
    pub derived_seeds: BTreeMap<String, u64>,
    pub format: OutputFormat,
    /// Full configuration, including every guard threshold.
    pub config: Config,
    pub files: Vec<String>,
}

/// Writes tables and artifacts into one output directory and records them
/// in `<command>.meta.json`.
pub struct Emitter {
    dir: PathBuf,
    format: OutputFormat,
    files: Vec<String>,
}

impl Emitter {
    pub fn new(dir: &Path, format: OutputFormat) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), format, files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `table` as `<name>.csv` or `<name>.json` and returns the path.
    pub fn table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        let (file, body) = match self.format {
            OutputFormat::Csv => (format!("{name}.csv"), table.to_csv()?),
            OutputFormat::Json => (format!("{name}.json"), crate::formats::to_json(&table.to_json())?),
        };
        let path = self.dir.join(&file);
        fs::write(&path, body)?;
        self.files.push(file);
        Ok(path)
    }

    /// Records a file written by the caller.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn finish(self, mut meta: Metadata) -> Result<PathBuf> {
        meta.format = self.format;
        meta.files = self.files;
        let path = self.dir.join(format!("{}.meta.json", meta.command));
        write_json(&path, &meta)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["k", "value", "note"]);
        t.push(vec![1usize.into(), 0.1.into(), "a,b".into()]);
        t.push(vec![2usize.into(), f64::NAN.into(), Cell::Empty]);
        t
    }

    #[test]
    fn csv_quotes_and_round_trips_floats() {
        let csv = sample().to_csv().unwrap();
        assert_eq!(csv, "k,value,note\n1,0.1,\"a,b\"\n2,NaN,\n");
    }

    #[test]
    fn json_rows_are_objects() {
        let v = sample().to_json();
        assert_eq!(v[0]["k"], 1);
        assert_eq!(v[0]["value"], 0.1);
        assert_eq!(v[1]["value"], "NaN");
        assert!(v[1]["note"].is_null());
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn rejects_ragged_rows() {
        Table::new(&["a"]).push(vec![]);
    }
}
