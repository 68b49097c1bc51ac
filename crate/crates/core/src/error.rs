use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented range or precondition.
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    /// A line of a line-delimited input could not be parsed or validated.
    #[error("line {line}: {field}: {message}")]
    Line {
        line: usize,
        field: String,
        message: String,
    },

    /// A scenario failed validation; every violation is listed.
    #[error("scenario invalid: {}", .0.join("; "))]
    Scenario(Vec<String>),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line: 2 for IO failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
