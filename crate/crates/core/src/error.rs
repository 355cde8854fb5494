use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error at row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("sample size {n} is below the minimum of {min}")]
    Size { n: usize, min: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("pattern {pattern}: {message}")]
    Pattern { pattern: String, message: String },

    #[error("alignment error: expected {expected} entries, found {found}")]
    Alignment { expected: usize, found: usize },

    #[error("design matrix is rank deficient: column `{column}` is linearly dependent on earlier columns")]
    Singular { column: String },

    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("invalid model state: {0}")]
    State(String),

    #[error("invalid model setup: {0}")]
    Spec(String),

    #[error("scenario {context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn with_context(self, context: impl Into<String>) -> Self {
        Error::Scenario {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
