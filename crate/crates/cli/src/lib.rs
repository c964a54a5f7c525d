//! Config-driven experiment runner on top of `attractor-core`.
//!
//! `run` reads a TOML config, executes one experiment kind and writes CSV
//! reports (with `#` provenance headers), optional SVG plots and a manifest
//! of content hashes into the output directory.

pub mod config;
pub mod manifest;
pub mod plot;
pub mod runner;

use std::fmt;

pub use config::ExperimentConfig;
pub use runner::{audit_config, run_config, RunOutcome};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ATTRACTOR_LAB_OUT";
/// Output directory used when neither the flag, the config nor the
/// environment provide one.
pub const DEFAULT_OUT_DIR: &str = "attractor-out";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Why a command did not complete.
#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration or input file; `field` is a dotted path.
    Schema { field: String, message: String },
    /// The simulation itself aborted (blow-up, Newton failure, ...).
    Numerical { provenance: String, error: attractor_core::Error },
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Schema { .. } => EXIT_SCHEMA,
            Failure::Numerical { .. } => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Schema { field, message } if field.is_empty() => write!(f, "config error: {message}"),
            Failure::Schema { field, message } => write!(f, "config error in '{field}': {message}"),
            Failure::Numerical { provenance, error } => write!(f, "numerical abort ({provenance}): {error}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
