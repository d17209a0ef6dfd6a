//! Result files: JSON documents and CSV tables with an embedded config line.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A CSV table of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// A float with 17 significant digits; non-finite values become empty cells.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a ExperimentConfig,
    seed: u64,
    result: &'a T,
}

pub fn json_document<T: Serialize>(config: &ExperimentConfig, seed: u64, result: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&Document { config, seed, result })
        .map_err(|e| CliError::Numeric(format!("cannot serialize the result: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn csv_document(config: &ExperimentConfig, table: &Table) -> Result<String, CliError> {
    let line = serde_json::to_string(config).map_err(|e| CliError::Numeric(format!("cannot serialize the config: {e}")))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)
        .and_then(|_| table.rows.iter().try_for_each(|r| w.write_record(r)))
        .map_err(|e| CliError::Numeric(format!("cannot write CSV: {e}")))?;
    let body = w.into_inner().map_err(|e| CliError::Numeric(format!("cannot write CSV: {e}")))?;
    Ok(format!("# config: {line}\n{}", String::from_utf8_lossy(&body)))
}

/// Write all files, or none if any target is unwritable.
pub fn write_all(files: &[(std::path::PathBuf, String)]) -> Result<(), CliError> {
    for (path, _) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                return Err(CliError::Config(format!("output directory {} does not exist", dir.display())));
            }
        }
    }
    for (path, text) in files {
        write(path, text)?;
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
