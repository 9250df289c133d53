use thiserror::Error;

/// Errors raised by the geometry, simulation and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigenvalue solver failed: {0}")]
    SolverFailure(String),
    #[error("finite-difference stencil of step {h} leaves the cone (boundary distance {distance})")]
    StepTooLarge { h: f64, distance: f64 },
    #[error("empty sample")]
    EmptySample,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("state budget exceeded: {states} states requested, cap is {cap}")]
    BudgetExceeded { states: u128, cap: u128 },
    #[error("model has no finite lattice support")]
    NonLatticeModel,
    #[error("survival too rare: {survivors} survivors after {attempts} attempts")]
    SurvivalTooRare { survivors: usize, attempts: u64 },
    #[error("insufficient points for fit: {usable} usable, need {needed}")]
    InsufficientPoints { usable: usize, needed: usize },
    #[error("too few samples: {got}, need {needed}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown check: {0}")]
    UnknownCheck(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
