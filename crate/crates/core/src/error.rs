use thiserror::Error;

use crate::dsl::ParseError;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{agent}` is not available at period {period}")]
    NotAvailable { agent: String, period: usize },
    #[error("invalid economy: {0}")]
    InvalidEconomy(String),
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("enumeration cap of {cap} exceeded ({what})")]
    SizeLimitExceeded { cap: usize, what: String },
    #[error("economy is not a continuation of the matching's economy: {0}")]
    NotAContinuation(String),
    #[error("preferences are not strict: {0}")]
    TiesPresent(String),
    #[error("fixed-point iteration produced an empty conjecture set for `{0}`")]
    EmptyFixedPoint(String),
    #[error("matching is not a candidate: {0}")]
    NotACandidate(String),
    #[error("bad matching specification: {0}")]
    BadMatchingSpec(String),
    #[error("invalid conjecture set: {0}")]
    InvalidConjecture(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T> = std::result::Result<T, Error>;
