use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `location` names the line, row or field.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Well-formed input that breaks one or more model invariants. Every
    /// breach found is listed.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("unknown component reference `{0}`")]
    UnknownComponent(String),

    /// Inputs that are individually valid but do not belong together, such
    /// as results produced from a different case.
    #[error("{0}")]
    Consistency(String),

    /// An operation was called outside its precondition.
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error: 2 for validation and consistency
    /// problems, 3 for I/O, 4 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::UnknownComponent(_)
            | Error::Consistency(_) => 2,
            Error::Io { .. } => 3,
            Error::Contract(_) | Error::Numerical(_) | Error::Json(_) => 4,
        }
    }
}
