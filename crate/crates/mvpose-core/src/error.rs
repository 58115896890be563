use std::path::PathBuf;

use thiserror::Error;

/// Error type shared across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("insufficient points: need at least {needed}, have {have}")]
    InsufficientPoints { needed: usize, have: usize },

    #[error("mesh has no usable triangles")]
    EmptyMesh,

    #[error("feature dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("class id {0} not present in the model library")]
    UnknownClass(u16),

    #[error("object placement failed after {tries} attempts; try fewer or smaller objects")]
    PlacementFailed { tries: usize },

    #[error("degenerate keypoint configuration: {0}")]
    DegenerateFit(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, offset: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
