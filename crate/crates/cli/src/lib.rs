//! Configuration, dispatch, and bit-stable result emission for the
//! passage simulator's command-line front end.
//!
//! Every command reads one TOML scenario file, writes its results under an
//! output directory, and prints the same JSON summary it wrote. Output
//! bytes depend only on the configuration, never on timing or worker
//! count, so result files can be diffed across runs and machines.

use std::path::PathBuf;

use thiserror::Error as ThisError;

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("configuration error at {path}: {message}")]
    Semantic { path: String, message: String },
    #[error("unknown preset '{0}'; available presets: cs-experiment")]
    UnknownPreset(String),
    #[error(transparent)]
    Physics(#[from] zeno_passage::Error),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("result encoding failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("result encoding failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool setup failed: {0}")]
    Pool(String),
}

impl Error {
    pub fn semantic(path: &str, message: impl Into<String>) -> Self {
        Error::Semantic { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
