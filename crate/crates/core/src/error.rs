use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("inconsistent trace: {0}")]
    Trace(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
