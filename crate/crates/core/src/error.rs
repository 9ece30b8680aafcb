use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// A malformed line in a line-oriented format.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A `<DOC>` block that could not be turned into a record.
    #[error("record at byte {offset}: {message}")]
    Record { offset: u64, message: String },

    /// METADATA that is not valid JSON, reported only in strict mode.
    #[error("record `{doc_id}` at byte {offset}: invalid METADATA JSON: {message}")]
    Metadata {
        offset: u64,
        doc_id: String,
        message: String,
    },

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("duplicate {kind} `{id}`")]
    Duplicate { kind: &'static str, id: String },

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index snapshot: {0}")]
    Snapshot(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("external classifier: {0}")]
    Classifier(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
