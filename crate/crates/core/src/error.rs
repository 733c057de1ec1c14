use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("embedding range: {0}")]
    EmbeddingRange(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("null model unavailable: {0}")]
    ModelUnavailable(String),

    #[error("invalid shift {shift} for series of length {len}")]
    InvalidShift { shift: usize, len: usize },

    #[error("generation failed: {0}")]
    GenerationFailure(String),

    #[error("integration failed: {0}")]
    IntegrationFailure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied input or configuration rather
    /// than a failure while computing.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidSpec(_)
                | Error::InvalidValue(_)
                | Error::EmptyInput(_)
                | Error::EmbeddingRange(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
