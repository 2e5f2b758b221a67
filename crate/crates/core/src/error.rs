use std::path::PathBuf;

/// Errors produced by the typing library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: malformed type path {path:?}: {reason}")]
    MalformedPath {
        line: usize,
        path: String,
        reason: String,
    },

    #[error("unknown type {0:?}")]
    UnknownType(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite gradient in parameter {param} at step {step}")]
    NonFiniteGradient { param: String, step: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{file}:{line}: {reason}")]
    Input {
        file: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("ontology hash mismatch: checkpoint has {expected}, ontology has {found}")]
    OntologyMismatch { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
