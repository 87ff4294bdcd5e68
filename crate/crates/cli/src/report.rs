use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Version of the CSV and sidecar layouts.
pub const SCHEMA_VERSION: u32 = 1;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const GIT_DESCRIBE: &str = env!("PIVOTWALK_GIT_DESCRIBE");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Engineering windows rather than sharp tests.
    pub diagnostic: bool,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail, diagnostic: false }
    }

    pub fn diagnostic(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail, diagnostic: true }
    }
}

/// A table with a header; every value is already formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// CSV text with a leading `schema_version` column.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head = vec!["schema_version".to_string()];
        head.extend(self.header.iter().cloned());
        w.write_record(&head)?;
        let v = SCHEMA_VERSION.to_string();
        for r in &self.rows {
            w.write_record(std::iter::once(&v).chain(r.iter()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 strings"))
    }
}

/// Shortest round-trip decimal.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub suite: String,
    pub trials: usize,
    pub table: Table,
    pub summary: Value,
    pub assertions: Vec<Assertion>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }
}

/// Metadata written next to each CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub suite: String,
    pub tool_version: String,
    pub git_describe: String,
    pub seed: u64,
    pub trials: usize,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub summary: Value,
}

impl Sidecar {
    pub fn new(config: &ExperimentConfig, outcome: &SuiteOutcome) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            suite: outcome.suite.clone(),
            tool_version: TOOL_VERSION.into(),
            git_describe: GIT_DESCRIBE.into(),
            seed: config.run.seed,
            trials: outcome.trials,
            config_hash: config.hash(),
            config: config.clone(),
            passed: outcome.passed(),
            assertions: outcome.assertions.clone(),
            summary: outcome.summary.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`; returns both paths.
pub fn write_outcome(
    dir: &Path,
    name: &str,
    config: &ExperimentConfig,
    outcome: &SuiteOutcome,
) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.json"));
    write(&csv_path, &outcome.table.to_csv()?)?;
    write(&json_path, &to_json(&Sidecar::new(config, outcome))?)?;
    Ok((csv_path, json_path))
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}
