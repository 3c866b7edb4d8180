use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the open interval (0, 1)")]
    ProbabilityDomain { name: &'static str, value: f64 },

    #[error("utilities must satisfy U(H,D) > U(H,notD) and U(notH,notD) > U(notH,D)")]
    DegenerateUtilities,

    #[error("model is invalid ({} violation(s))", .0.len())]
    InvalidModel(Vec<Violation>),

    #[error("unknown evidence id `{0}`")]
    UnknownEvidence(String),

    #[error("evidence id `{0}` appears more than once")]
    DuplicateEvidence(String),

    #[error("{what} of size {size} exceeds the configured cap of {cap}{hint}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("observation is missing evidence `{0}`")]
    MissingObservation(String),

    #[error("observation supplies evidence `{0}` that is not part of the compiled artifact")]
    UnexpectedObservation(String),

    #[error("expected value was computed for {found}, but the report is for {expected}")]
    ProvenanceMismatch { expected: String, found: String },

    #[error("situation-action tree is malformed: {0}")]
    MalformedTree(String),

    #[error("method `{0}` is not supported here")]
    UnsupportedMethod(&'static str),

    #[error("artifact was compiled from a different model (digest {artifact}, model {model})")]
    DigestMismatch { artifact: String, model: String },

    #[error("malformed compiled table: {0}")]
    MalformedTable(String),

    #[error("unsupported compiled table version {0}")]
    UnsupportedVersion(u8),

    #[error("invalid weight profile: {0}")]
    InvalidProfile(String),

    #[error("{mode} loss normalization needs a positive denominator, got {denominator}")]
    Normalization { mode: &'static str, denominator: f64 },

    #[error("{0}")]
    OutOfRange(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
