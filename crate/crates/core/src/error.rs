use thiserror::Error;

/// Errors raised by the family, hyperbolicity, graph-transform and orbit modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("index {index} outside the materialized window [-{window}, {window}]")]
    WindowExceeded { index: i64, window: i64 },

    #[error("component mismatch: expected component {expected}, got {got}")]
    ComponentMismatch { expected: i64, got: i64 },

    #[error("invalid metric tensor: {0}")]
    InvalidMetric(String),

    #[error("invalid torus map: {0}")]
    InvalidMap(String),

    #[error("inversion failed after {iterations} iterations (residual {residual:e})")]
    InversionFailure { iterations: usize, residual: f64 },

    #[error("splitting depth {depth} insufficient: residual {residual:e} above tolerance {tolerance:e}")]
    InsufficientDepth {
        depth: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("adapted metric truncation depth {depth} insufficient at index {index}: tail {tail:e}")]
    TruncationDepth { index: i64, depth: usize, tail: f64 },

    #[error("hyperbolicity margin violated at index {index}: {detail}")]
    HyperbolicityMargin { index: i64, detail: String },

    #[error("chart cap violated at index {index}: image norm {norm:e} exceeds radius {radius:e}")]
    CapViolation { index: i64, norm: f64, radius: f64 },

    #[error("schedule infeasible at index {index}: {detail}")]
    ScheduleInfeasible { index: i64, detail: String },

    #[error("coverage failure at index {index}: r_n covers [{low:e}, {high:e}], need radius {needed:e}")]
    Coverage {
        index: i64,
        low: f64,
        high: f64,
        needed: f64,
    },

    #[error("contract violation at index {index}: {detail}")]
    ContractViolation { index: i64, detail: String },

    #[error("fixed point did not converge in {sweeps} sweeps (last distance {last:e})")]
    NonConvergence { sweeps: usize, trace: Vec<f64>, last: f64 },

    #[error("metrics are not uniformly equivalent: {0}")]
    NotUniformlyEquivalent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
