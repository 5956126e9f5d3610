use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bad vertex index {index} at line {line}")]
    BadVertexIndex { line: usize, index: usize },

    #[error("non-conforming mesh at edge ({}, {}): {msg}", edge.0, edge.1)]
    NonConforming { edge: (usize, usize), msg: String },

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("linear solve failed ({msg}); condition estimate {condition_estimate:.3e}")]
    Solver {
        msg: String,
        condition_estimate: f64,
    },

    #[error("non-finite value after {step} steps")]
    NonFinite { step: usize },

    #[error("state is not consistent with the streamfunction relation (relative residual {residual:.3e})")]
    InconsistentState { residual: f64 },

    #[error("point ({x:.6e}, {y:.6e}) lies outside the data grid")]
    OutsideGrid { x: f64, y: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dense operator of size {size} exceeds the configured cap of {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
