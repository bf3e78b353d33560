//! Error type for everything the lab crate does with the outside world.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    /// Filesystem failure, wrapped with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Anything the numeric core rejected.
    #[error(transparent)]
    Core(#[from] malgan_core::error::Error),

    /// A text or binary artifact that does not match its documented format.
    /// `location` pinpoints the failure (file, row/column, byte offset, or
    /// JSON path depending on the format).
    #[error("{location}: {message}")]
    Format { location: String, message: String },

    /// Configuration problems: unknown keys, unparsable or out-of-range
    /// values. Always names the offending key.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    /// A subcommand was asked to read an artifact nothing has produced yet.
    /// The message names the subcommand that creates it.
    #[error("missing {artifact}: run `{producer}` first (expected at {path})")]
    MissingArtifact {
        artifact: String,
        producer: &'static str,
        path: PathBuf,
    },
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Format {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Exit code classification: configuration and format validation map to
    /// 1, runtime failures (IO, numerics, missing artifacts) to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } | LabError::Format { .. } => 1,
            LabError::Io { .. } | LabError::Core(_) | LabError::MissingArtifact { .. } => 2,
        }
    }
}
