//! Tabular experiment output and its CSV dialect.
//!
//! Files are comma separated with LF line endings. A `#` comment block at
//! the top names the experiment and lists the resolved config, one
//! `# key = value` line per key in sorted order. Floats use Rust's shortest
//! round-trip formatting, so identical inputs give identical bytes.

use std::fmt;
use std::io::{self, Write};

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Int(x) => write!(f, "{x}"),
            Cell::Bool(x) => write!(f, "{x}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    /// Flattened config, sorted by key.
    pub inputs: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// `key = value` pairs of the config with JSON-encoded values.
pub fn flatten_config(cfg: &ScenarioConfig) -> Vec<(String, String)> {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let map = value.as_object().expect("config is an object");
    map.iter()
        .map(|(k, v)| (k.clone(), v.to_string()))
        .collect()
}

impl ExperimentRecord {
    pub fn new(experiment_id: &str, cfg: &ScenarioConfig, columns: Vec<&'static str>) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            inputs: flatten_config(cfg),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# experiment: {}", self.experiment_id)?;
        for (k, v) in &self.inputs {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
