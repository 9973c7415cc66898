//! File formats, report writers and the stage implementations behind the
//! `neurodeck` command-line tool.

pub mod analyze;
pub mod config;
pub mod context;
pub mod data;
pub mod digest;
pub mod error;
pub mod neeg;
pub mod parallel;
pub mod pipeline;
pub mod provenance;
pub mod topomap;
pub mod training;
pub mod verify;

pub use config::{ModelChoice, PipelineConfig};
pub use context::Context;
pub use error::{CliError, Result};
