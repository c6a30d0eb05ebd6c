//! Crate-wide error type.
//!
//! One enum for the whole library keeps the CLI's exit-code mapping simple:
//! every variant here is a data or validation problem (exit 2 from the
//! binary); usage errors and panics are handled at the binary boundary.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate doc_id {doc_id:?}")]
    DuplicateDocId { doc_id: String },

    #[error("malformed record at {location}: {reason}")]
    MalformedRecord { location: String, reason: String },

    #[error("collection contains no documents")]
    EmptyCollection,

    #[error("collection contains no tokens")]
    NoTokens,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("n-gram order {order} unsupported (expected 1, 2, or 3)")]
    InvalidOrder { order: usize },

    #[error("model file {path}, line {line}: {reason}")]
    ModelFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("reference token sequence is empty")]
    EmptyReference,

    #[error("reference contains no content words")]
    NoContentWords,

    #[error("error-type mix does not sum to 1 (got {sum})")]
    BadErrorMix { sum: f64 },

    #[error("topic block starting at byte {offset} has no topic id")]
    MissingTopicId { offset: usize },

    #[error("duplicate topic id {topic_id:?}")]
    DuplicateTopicId { topic_id: String },

    #[error("unclosed <{tag}> starting at byte {offset}")]
    UnclosedTag { tag: String, offset: usize },

    #[error("topic {topic_id}: field {field} is missing or empty")]
    EmptyQueryField { topic_id: String, field: &'static str },

    #[error("topic {topic_id} has no relevant documents in the qrels")]
    NoRelevantDocs { topic_id: String },

    #[error("no topics could be evaluated")]
    NothingToEvaluate,

    #[error("{stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn malformed(location: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::MalformedRecord { location: location.into(), reason: reason.into() }
    }

    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(stage: impl Into<String>) -> impl FnOnce(Error) -> Error {
        let stage = stage.into();
        move |e| Error::Stage { stage, source: Box::new(e) }
    }
}
