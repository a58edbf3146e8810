use thiserror::Error;

use crate::solvers::SolverState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero matrix has no σ̲")]
    ZeroMatrix,

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("constraints are infeasible: b is not in the range of B (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("problem violates the regularity assumption: no unique constrained minimizer ({0})")]
    NoUniqueMinimizer(String),

    #[error("w★ fails stationarity, not an optimum (residual {residual:e})")]
    NotStationary { residual: f64 },

    #[error("forward-backward requires homogeneous constraint (b = 0)")]
    NonHomogeneousConstraint,

    #[error("strong convexity required: {0}")]
    StrongConvexityRequired(String),

    #[error("inadmissible step sizes: {0}")]
    InadmissibleStepSizes(String),

    #[error("invalid regularity constants: {0}")]
    InvalidConstants(String),

    #[error("iterates diverged at iteration {}", .last_finite.iteration)]
    Diverged { last_finite: Box<SolverState> },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("network is disconnected")]
    Disconnected,

    #[error("invalid combination matrix: {0}")]
    InvalidCombinationMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
