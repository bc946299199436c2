//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry {value} at position ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize, value: f64 },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix exponential scaling cap exceeded (norm {norm:.3e})")]
    ScalingCapExceeded { norm: f64 },

    #[error("singular linear system in {context}")]
    SingularSystem { context: &'static str },

    #[error("lower bound exceeds upper bound at index {index}: {lower} > {upper}")]
    BoundOrder {
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("row {row} has an empty feasible set")]
    EmptyRow { row: usize },

    #[error("constraint in row {row} has {got} coefficients, expected {expected}")]
    BadConstraint {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("linear program failed: {0}")]
    Lp(&'static str),

    #[error("monotonicity violated: {reason}")]
    MonotonicityViolation { reason: String },

    #[error("partition needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("partition points must increase by more than {tol:e}: t[{index}] = {value} after {previous}")]
    NotIncreasing {
        index: usize,
        value: f64,
        previous: f64,
        tol: f64,
    },

    #[error("partition endpoints {first}..{last} do not span 0..{horizon}")]
    SpanMismatch { first: f64, last: f64, horizon: f64 },

    #[error("partitions must share endpoints: {left:?} vs {right:?}")]
    EndpointMismatch { left: (f64, f64), right: (f64, f64) },

    #[error("bound parameter {name} is required for kind {kind}")]
    MissingParameter {
        kind: &'static str,
        name: &'static str,
    },

    #[error("bound parameter {name} is invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("tolerance {tol:e} unreachable within {cap} steps for norm {norm}")]
    ToleranceUnreachable { tol: f64, norm: f64, cap: u64 },

    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),

    #[error("brute-force cap exceeded: {what} = {got}, cap {cap}")]
    CapExceeded {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("problem file: {0}")]
    Schema(String),

    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
