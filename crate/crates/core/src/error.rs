use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AleError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AleError {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document {context}: {message}")]
    Malformed { context: String, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid sigma parameters: {0}")]
    InvalidSigma(String),

    #[error("prototype distance matrix rejected: {0}")]
    ProtoDist(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("duplicate {what} in explanation: {detail}")]
    Duplicate { what: &'static str, detail: String },

    #[error("explanation paradigm mismatch: expected {expected}, got {got}")]
    ParadigmMismatch { expected: String, got: String },

    #[error("hyperspheres do not intersect (d = {distance}, r1 = {r1}, r2 = {r2})")]
    EmptyIntersection { distance: f64, r1: f64, r2: f64 },

    #[error("hypersphere centers coincide (d = {0})")]
    CoincidentCenters(f64),

    #[error("no sphere state for covered component {0}")]
    MissingSphere(usize),

    #[error("distance for pair ({0}, {1}) not available")]
    MissingDistance(usize, usize),

    #[error("explanation is not verified")]
    NotVerified,

    #[error("full explanation of {pairs} pairs still fails verification")]
    Exhausted { pairs: usize },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("corner enumeration refused: m = {0} exceeds the limit of {1}")]
    TooManyPrototypes(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl AleError {
    pub(crate) fn malformed(context: impl Into<String>, message: impl std::fmt::Display) -> Self {
        AleError::Malformed {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
