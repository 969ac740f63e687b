use serde_json::json;

/// Failure of a subcommand, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or input documents (exit 2).
    #[error("{message}")]
    Usage {
        message: String,
        pointer: Option<String>,
    },
    /// Anything that went wrong while running (exit 1).
    #[error(transparent)]
    Runtime(#[from] deconv_core::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage {
            message: message.into(),
            pointer: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Usage { message, pointer } => json!({
                "error": {"kind": "usage", "message": message, "pointer": pointer}
            }),
            CliError::Runtime(e) => {
                let kind = match e {
                    deconv_core::Error::Domain(_) => "domain",
                    deconv_core::Error::Resource(_) => "resource",
                    deconv_core::Error::Config { .. } => "config",
                    deconv_core::Error::NumericalRange(_) => "numerical-range",
                    deconv_core::Error::UnsupportedClass(_) => "unsupported",
                    deconv_core::Error::Degenerate(_) => "degenerate",
                    deconv_core::Error::Data(_) => "data",
                    deconv_core::Error::Io(_) => "io",
                    deconv_core::Error::Csv(_) => "csv",
                    deconv_core::Error::Json(_) => "json",
                };
                json!({"error": {"kind": kind, "message": e.to_string()}})
            }
        }
    }
}

/// Config documents and input files are user input: their errors are usage
/// errors.
pub fn input_error(e: deconv_core::Error) -> CliError {
    match e {
        deconv_core::Error::Config { message, pointer } => CliError::Usage { message, pointer },
        deconv_core::Error::Data(m) => CliError::usage(m),
        deconv_core::Error::Csv(e) => CliError::usage(e.to_string()),
        other => CliError::Runtime(other),
    }
}
