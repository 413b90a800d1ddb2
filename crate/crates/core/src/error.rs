use thiserror::Error;

/// Errors raised by the array design library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible layout: {0}")]
    InfeasibleLayout(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("singular channel: condition number {condition:.3e} exceeds guard")]
    SingularChannel { condition: f64 },

    #[error("invalid probing waveform: {0}")]
    InvalidWaveform(String),

    #[error("degenerate axis: variance of the fixed coordinate is zero")]
    DegenerateAxis,

    #[error("linearization undefined: antennas {0} and {1} coincide")]
    LinearizationUndefined(usize, usize),

    #[error("infeasible CRB threshold: {0}")]
    InfeasibleThreshold(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
