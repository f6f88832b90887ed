//! Declarative experiment runner: scenario registry, JSON configs, deterministic runs,
//! CSV/JSON outputs and CI exit codes (0 ok, 2 config, 3 numerical, 4 certificate failed).

pub mod batch;
pub mod config;
pub mod registry;
pub mod runner;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use batch::{run_batch, BatchEntry, BatchJob, BatchReport};
pub use config::{Model, Profile, RunConfig};
pub use runner::{run, Certificate, Manifest, RunReport, REPORT_FILE, SERIES_FILE, TIMING_FILE};

/// Environment variable overriding the base output directory.
pub const OUT_ENV: &str = "HYPODECAY_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CERTIFICATE: i32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => EXIT_CONFIG,
            RunError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

/// `<base>/<name>` when a base is given (flag or `HYPODECAY_OUT`), else the config's own dir.
pub fn resolve_out_dir(cfg: &RunConfig, base: Option<&Path>, name: &str) -> PathBuf {
    match base {
        Some(b) => b.join(name),
        None => PathBuf::from(&cfg.outputs.dir),
    }
}
