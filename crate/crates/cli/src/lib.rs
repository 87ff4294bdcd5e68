//! Experiment runner: configuration, the Schottky search artifact, test
//! suites with CSV and JSON reports, and single-trial replay.

pub mod config;
pub mod model;
pub mod replay;
pub mod report;
pub mod schottky;
pub mod suites;

use thiserror::Error;

use pivotwalk::geometry::GeometryError;
use pivotwalk::models::ModelError;
use pivotwalk::pivots::PivotError;
use pivotwalk::presets::PresetError;
use pivotwalk::schottky::SchottkyError;
use pivotwalk::stats::StatsError;
use pivotwalk::walk::WalkError;

/// Exit code when every assertion passes.
pub const EXIT_PASS: i32 = 0;
/// Exit code for assertion failures and failed computations.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("config hash mismatch: report has {expected}, replay config hashes to {got}")]
    HashMismatch { expected: String, got: String },
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Pivot(#[from] PivotError),
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error(transparent)]
    Schottky(#[from] SchottkyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(..) | CliError::HashMismatch { .. } => EXIT_USAGE,
            _ => EXIT_FAIL,
        }
    }
}
