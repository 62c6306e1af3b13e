use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

/// One CSV cell. Floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u64> for Cell {
    // seeds above i64::MAX stay exact as text
    fn from(i: u64) -> Self {
        Cell::Text(i.to_string())
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

/// Points in chart coordinates as `a;b;c`.
pub fn point_cell(x: &[f64]) -> Cell {
    Cell::Text(x.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(";"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; written as `<name>.csv`.
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub started: String,
    pub finished: String,
    pub version: String,
    /// sha256 of every written file other than the manifest, by file name.
    pub digests: BTreeMap<String, String>,
}

fn write(dir: &Path, name: &str, bytes: &[u8], digests: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    fs::write(dir.join(name), bytes)?;
    digests.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
    Ok(())
}

/// Writes the tables, `report.json` and `manifest.json` into `config.out`.
pub fn write_artifacts(
    config: &ExperimentConfig,
    tables: &[Table],
    report: &serde_json::Value,
    started: String,
) -> Result<RunManifest, CliError> {
    let dir = &config.out;
    fs::create_dir_all(dir)?;
    let mut digests = BTreeMap::new();
    for t in tables {
        write(dir, &format!("{}.csv", t.name), &t.to_csv()?, &mut digests)?;
    }
    write(dir, "report.json", &serde_json::to_vec_pretty(report)?, &mut digests)?;
    let manifest = RunManifest {
        config: config.clone(),
        started,
        finished: timestamp(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        digests,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339()
}
