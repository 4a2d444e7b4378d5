use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid usage: {0}")]
    Usage(String),
    #[error("missing stage: {stage} ({path} not found)")]
    MissingStage { stage: &'static str, path: PathBuf },
    #[error("data error in {path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] egoshift_core::Error),
}

impl PipelineError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Usage(_) => 2,
            PipelineError::MissingStage { .. } => 3,
            PipelineError::Data { .. } | PipelineError::Io { .. } | PipelineError::Core(_) => 4,
        }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        PipelineError::Data { path: path.into(), message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }
}
