use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for a graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },

    #[error("weight matrix is not symmetric at ({u}, {v})")]
    NotSymmetric { u: usize, v: usize },

    #[error("invalid weight {weight} at ({u}, {v}): weights must be finite and nonnegative")]
    InvalidWeight { u: usize, v: usize, weight: f64 },

    #[error("vertex {0} has zero degree")]
    ZeroDegree(usize),

    #[error("skeleton graph is not connected")]
    Disconnected,

    #[error(
        "random-walker skeletons need a positive self-loop on every vertex (missing at vertex {0})"
    )]
    MissingSelfLoop(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("enumeration needs {required} configurations, exceeding the cap of {cap}")]
    EnumerationBudget { required: u128, cap: u64 },

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("adaptive step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("sample grids differ between the compared paths")]
    GridMismatch,

    #[error("phase vector is not an element of the equilibrium set: entry {index} = {value}")]
    NotInEquilibriumSet { index: usize, value: f64 },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
