//! Scenario runner for `eitlab-core`: JSON experiment configs, the run
//! pipeline, parameter sweeps, JSON reports and CSV plot data.
//!
//! Exit status contract of the `eitlab` binary:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | file system error |
//! | 2 | structural error: bad config, violated hypothesis, geometry, mesh or solver failure |
//! | 3 | an inequality that should hold failed empirically |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

pub mod config;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod sweep;

pub use config::{CheckKind, ExperimentConfig};
pub use pipeline::{run, validate, RunOutput};
pub use report::{RunReport, Timings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_STRUCTURAL: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum LabError {
    Config(String),
    Io(String),
    Core(eitlab_core::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Io(_) => EXIT_IO,
            LabError::Config(_) | LabError::Core(_) => EXIT_STRUCTURAL,
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(m) => write!(f, "config error: {m}"),
            LabError::Io(m) => write!(f, "io error: {m}"),
            LabError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<eitlab_core::Error> for LabError {
    fn from(e: eitlab_core::Error) -> Self {
        LabError::Core(e)
    }
}

pub(crate) fn io_err(path: &std::path::Path, e: impl fmt::Display) -> LabError {
    LabError::Io(format!("{}: {e}", path.display()))
}
