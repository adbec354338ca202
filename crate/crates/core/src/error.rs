use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("construction infeasible: {0}")]
    ConstructionInfeasible(String),

    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("opinion of agent {agent} is {value}, outside [0, 1]")]
    OpinionOutOfRange { agent: usize, value: f64 },

    #[error("agent {agent} has negative bias at a boundary opinion")]
    BoundaryWithNegativeBias { agent: usize },

    #[error("agent {agent} has no neighbors and zero self-weight")]
    IsolatedAgent { agent: usize },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("equilibrium family requires strictly positive bias (agent {agent} has {bias})")]
    OutOfFamily { agent: usize, bias: f64 },

    #[error("not an equilibrium: {0}")]
    NotAnEquilibrium(String),

    #[error("equilibrium family undefined: {0}")]
    FamilyUndefined(String),

    #[error("no equilibrium found near the guess (best residual {best_residual:e})")]
    EquilibriumNotFound { best_residual: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("matrix has non-finite entries")]
    SingularInput,

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Experiment {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse { line: None, msg: msg.into() }
    }

    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Experiment { context: context.into(), source: Box::new(self) }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
