//! Stage runner, file formats and command-line interface around
//! `egoshift-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{PipelineError, Result};
pub use pipeline::{run_stages, RunOptions, Runner, Stage};
