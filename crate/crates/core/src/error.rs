use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("integration blew up at step {step}")]
    BlowUp { step: usize },

    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("filter diverged at step {step}: {reason}")]
    FilterDiverged { step: usize, reason: String },

    #[error("all particle weights vanished at step {step}")]
    WeightUnderflow { step: usize },

    #[error("unknown system id `{0}`")]
    UnknownSystem(String),

    #[error("infeasible test-index constraints: {0}")]
    Infeasible(String),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
