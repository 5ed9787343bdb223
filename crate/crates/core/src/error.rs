use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_id}: {source}")]
    Io {
        source_id: String,
        #[source]
        source: io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    /// A configuration value is out of range; carries the offending field name.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("PCA fit failed: {0}")]
    Fit(String),

    #[error("training failed: {0}")]
    Train(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("corrupt model file: {0}")]
    Model(String),
}

impl Error {
    pub fn io(source_id: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            source_id: source_id.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
