use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("field `{field}`: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("field `{field}` at t={t}, x={x:?}: {source}")]
    Eval {
        field: String,
        t: f64,
        x: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("data not bounded: {0}")]
    Unbounded(String),
    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    LinearSolve { iterations: usize, residual: f64 },
    #[error("continuation step {lambda}: contraction factor {factor} ≥ 1; reduce lambda_step")]
    NoContraction { lambda: f64, factor: f64 },
    #[error("continuation step {lambda}: Picard iteration did not converge in {iterations} iterations")]
    PicardStalled { lambda: f64, iterations: usize },
    #[error("characteristic left the admissible region at t={t} (|x| = {norm})")]
    FlowBlowUp { t: f64, norm: f64 },
    #[error("stationarity not reached within horizon {horizon} (last change {change:e})")]
    NotStationary { horizon: f64, change: f64 },
    #[error("hypotheses violated: {0}")]
    HypothesisViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
