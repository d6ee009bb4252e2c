use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed strategy code `{0}`: expected four dot-separated parts")]
    MalformedCode(String),

    #[error("unknown level `{level}` for dimension {dimension} in code `{code}`")]
    UnknownLevel {
        code: String,
        dimension: &'static str,
        level: String,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("no stakeholder is flagged on any factor")]
    NoFlaggedStakeholders,

    #[error("strategy `{0}` missing from score table")]
    MissingStrategy(String),

    #[error("strategy `{0}` appears more than once")]
    DuplicateStrategy(String),

    #[error("score {value} for strategy `{strategy}` is not an integer in [-5, 5]")]
    ScoreOutOfRange { strategy: String, value: f64 },

    #[error("unsupported significance level {0} (expected 0.05 or 0.01)")]
    UnsupportedSignificance(f64),

    #[error("invalid game state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("adaptive step size fell below {min:e} at t = {t}")]
    StepSizeUnderflow { t: f64, min: f64 },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}
