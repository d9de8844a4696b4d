use thiserror::Error;

/// Errors raised by the geometric routines and solvers of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point coincides with the inversion center")]
    InversionSingularity,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("mean-convexity lost at node {node} (H = {value:e})")]
    MeanConvexityLost { node: usize, value: f64 },

    #[error("flow became unstable: {0}")]
    Unstable(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("level set escaped the computational domain: {0}")]
    Escaped(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
