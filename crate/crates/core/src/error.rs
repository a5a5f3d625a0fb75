use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus contains no valid investment events")]
    EmptyCorpus,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("unknown representation label `{0}`")]
    UnknownRepresentation(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite value produced during diffusion step {step}")]
    NumericalFailure { step: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training failed: {0}")]
    Training(String),

    #[error("no evaluable target startups")]
    NoEvaluableTargets,

    #[error("synthetic generation failed: {0}")]
    Synth(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
