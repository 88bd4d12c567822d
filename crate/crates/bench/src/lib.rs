//! Sweep harness for test-and-match: TOML configuration, the paired
//! hard-instance sweep, CSV persistence, SVG plots and a quick invariant
//! suite.

pub mod checks;
pub mod config;
pub mod plot;
pub mod report;
pub mod sweep;

use std::path::PathBuf;

pub use config::Config;
pub use sweep::{run_sweep, ResultRow, SweepSpec, Variant, VariantKind};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Csv { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] tam_core::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
