use std::path::PathBuf;

use thiserror::Error;

use crate::network::NodeId;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl InstanceError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        InstanceError::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("node {node} has zero total inflow weight in period {period}")]
    ZeroInflow { node: NodeId, period: usize },
    #[error("charge-flow system is singular in period {period}")]
    Singular { period: usize },
    #[error("invalid pad assignment: {0}")]
    Assignment(String),
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("node {node} has zero total inflow weight in period {period}")]
    ZeroInflow { node: NodeId, period: usize },
    #[error("big-M {big_m} is below the attainable maximum {bound} of the gated expression")]
    UnsoundBigM { big_m: f64, bound: f64 },
    #[error("malformed model: {0}")]
    Model(String),
}

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("malformed model: {0}")]
    Model(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("search space of {size:.3e} assignments exceeds the cap {cap}")]
    SearchSpace { size: f64, cap: u64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Umbrella error for callers that chain several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file: {0}")]
    Format(String),
}
