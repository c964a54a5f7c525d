use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value {value} at grid index {index} ({context})")]
    NonFinite {
        index: usize,
        value: f64,
        context: &'static str,
    },

    #[error("non-finite function value {value} at s = {s} ({what})")]
    AuditNonFinite { s: f64, value: f64, what: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("horizon {span} is not a whole number of steps of size {dt} (off by {offset} steps)")]
    MisalignedHorizon { span: f64, dt: f64, offset: f64 },

    #[error("Newton iteration did not converge at t = {time}: residual {residual:e} after {iterations} iterations")]
    NewtonDiverged {
        time: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("blow-up detected at t = {time}: energy norm {x_norm:e}")]
    BlowUp { time: f64, x_norm: f64 },

    #[error("trajectory has no energy records")]
    MissingEnergyRecords,

    #[error("insufficient sampling: {have} samples over the window, need at least {need}")]
    InsufficientSampling { have: usize, need: usize },

    #[error("trajectories are not on a common time grid: {0}")]
    GridMismatch(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("need at least {need} states, got {got}")]
    TooFewStates { need: usize, got: usize },

    #[error("damping-gap constant could not be certified: {0}")]
    DampingGap(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
