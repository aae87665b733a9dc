use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: malformed JSONL record: {msg}", path.display())]
    MalformedJsonl { path: PathBuf, line: usize, msg: String },

    #[error("{}:{line}: malformed CoNLL-U: {msg}", path.display())]
    MalformedConllu { path: PathBuf, line: usize, msg: String },

    #[error("document {doc_id:?}: empty document")]
    EmptyDocument { doc_id: String },

    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),

    #[error("parse references doc_id {0:?} with no matching document")]
    OrphanParse(String),

    #[error("invalid corpus metadata: {0}")]
    InvalidMeta(String),

    #[error("generation series: {0}")]
    Series(String),

    #[error("feature {0:?}: parses required")]
    ParsesRequired(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A statistic is undefined for the input (constant vector, zero SD, ...).
    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    /// True for errors caused by malformed or inconsistent input, as opposed
    /// to IO failures or statistics that are undefined on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MalformedJsonl { .. }
                | Error::MalformedConllu { .. }
                | Error::EmptyDocument { .. }
                | Error::DuplicateDocId(_)
                | Error::OrphanParse(_)
                | Error::InvalidMeta(_)
                | Error::Series(_)
                | Error::ParsesRequired(_)
                | Error::UnknownFeature(_)
                | Error::InvalidArgument(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
