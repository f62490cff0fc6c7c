use thiserror::Error;

pub type Result<T> = std::result::Result<T, RadsError>;

#[derive(Debug, Error)]
pub enum RadsError {
    #[error("input shape mismatch: expected {expected}, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    /// A record in an input file failed validation. `line` is 1-based.
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    /// A configuration field violated its range; `field` is a dotted path.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("ROC-AUC is undefined when labels contain a single class")]
    UndefinedAuc,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RadsError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        RadsError::Parameter(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        RadsError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, RadsError::Io(_) | RadsError::Numeric(_))
    }
}
