use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. The `Display` of each variant starts
/// with a stable lowercase tag so command-line callers can match on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse: line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation: line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("degenerate-window: need at least 2 frames, got {0}")]
    DegenerateWindow(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("shape: {0}")]
    Shape(String),

    #[error("non-finite: {0}")]
    NonFinite(String),

    #[error("undefined-auc: {0}")]
    UndefinedAuc(String),

    #[error("missing-class: {0}")]
    MissingClass(String),

    #[error("not-fitted: {0}")]
    NotFitted(String),

    #[error("contract: {0}")]
    Contract(String),

    #[error("empty-input: {0}")]
    EmptyInput(String),

    #[error("unknown-model: {0}")]
    UnknownModel(String),

    #[error("format: {0}")]
    Format(String),

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The machine-parsable prefix of the message (text before the first `:`).
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::DegenerateWindow(_) => "degenerate-window",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non-finite",
            Error::UndefinedAuc(_) => "undefined-auc",
            Error::MissingClass(_) => "missing-class",
            Error::NotFitted(_) => "not-fitted",
            Error::Contract(_) => "contract",
            Error::EmptyInput(_) => "empty-input",
            Error::UnknownModel(_) => "unknown-model",
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
