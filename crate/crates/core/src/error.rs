use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel: {field}: {reason}")]
    InvalidChannel { field: String, reason: String },

    #[error("invalid synthesis parameters: {0}")]
    InvalidParams(String),

    #[error("scenario parse error in {path}: {message}")]
    ScenarioParse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown method name `{0}`")]
    UnknownMethod(String),

    #[error("reference line conflict for user {user}: {reason}")]
    ReferenceConflict { user: usize, reason: String },

    #[error("stationarity polynomial of degree {degree} has no closed-form roots")]
    NoClosedForm { degree: usize },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("could not bracket the dual variable for user {user}: total power {power} mW still above budget {budget} mW at lambda {lambda}")]
    BracketFailure {
        user: usize,
        lambda: f64,
        power: f64,
        budget: f64,
    },

    #[error("invalid allocation rule `{rule}`: {reason}")]
    InvalidRule { rule: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn channel(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidChannel {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
