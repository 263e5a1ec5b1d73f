use thiserror::Error;

use crate::model::TeamId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing metadata: {0}")]
    MissingMetadata(String),

    #[error("team '{0}' is neither the home nor the away team")]
    UnknownTeam(TeamId),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("metadata: {0}")]
    Metadata(String),

    #[error("tracking file: {0}")]
    TrackingFormat(String),

    #[error("tracking file contains no valid frames")]
    NoFrames,

    #[error("timeline has {got} labels but the recording has {expected} frames")]
    TimelineMismatch { expected: usize, got: usize },

    #[error("angle undefined for a zero-length velocity")]
    UndefinedAngle,

    #[error("mean undefined: no pair has eligible frames")]
    UndefinedMean,

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("graph document parse error at line {line}, column {column}: {message}")]
    GraphParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("graph validation: {0}")]
    GraphValidation(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
