use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A request would exceed addressable memory or size limits.
    #[error("resource error: {0}")]
    Resource(String),

    /// An experiment or grid configuration is inconsistent.
    #[error("configuration error: {message}")]
    Config {
        message: String,
        /// JSON pointer of the offending field, when the error came from a config document.
        pointer: Option<String>,
    },

    /// A quantity under- or overflows double precision.
    #[error("numerical range error: {0}")]
    NumericalRange(String),

    /// The operation has no defined meaning for this noise smoothness class.
    #[error("unsupported noise class: {0}")]
    UnsupportedClass(String),

    /// A degenerate input (zero curvature, zero asymptotic variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed or unusable data.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config {
            message: msg.into(),
            pointer: None,
        }
    }

    pub(crate) fn config_at(pointer: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            message: msg.into(),
            pointer: Some(pointer.into()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
