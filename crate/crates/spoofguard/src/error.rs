//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the verification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed row: {detail}")]
    MalformedRow {
        path: String,
        line: usize,
        detail: String,
    },

    #[error("non-monotone timestamps in {name}: {detail}")]
    NonMonotone { name: String, detail: String },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty series passed to an elastic kernel; impute before embedding")]
    EmptySeries,

    #[error("brute-force oracle limited to series of length <= {max}, got {got}")]
    SeriesTooLong { max: usize, got: usize },

    #[error("labels contain a single class; need both 0- and 1-events")]
    SingleClass,

    #[error("untrainable event {event}: no 1-events in the development split")]
    UntrainableEvent { event: String },

    #[error("no informative sensors for event {event} at threshold {threshold}")]
    NoInformativeSensors { event: String, threshold: f64 },

    #[error("event {event} too rare for cross-validation: no usable splits")]
    TooRareForCv { event: String },

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ragged feature matrix: row {row} has length {got}, expected {expected}")]
    RaggedMatrix {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("insufficient evidence window for claim at {claim_ns} ns: {detail}")]
    InsufficientCoverage { claim_ns: i64, detail: String },

    #[error("unknown sensor {0}")]
    UnknownSensor(String),

    #[error("unknown event type {0}")]
    UnknownEvent(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("incompatible bundle: {0}")]
    IncompatibleBundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
