use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unsupported transform size {0} (power of two required)")]
    UnsupportedSize(usize),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("recovery window exhausted: p_diamond = {p_diamond} but the largest usable node is {max_node}")]
    WindowExhausted { p_diamond: f64, max_node: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tolerance {epsilon} is not reachable on the resolvable frequency range")]
    UnreachableTolerance { epsilon: f64 },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("unitarity drift {drift:e} exceeds guard {limit:e}")]
    UnitarityDrift { drift: f64, limit: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures detected by numerical guards during a run, as
    /// opposed to bad input.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(self, Error::WindowExhausted { .. } | Error::UnitarityDrift { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
