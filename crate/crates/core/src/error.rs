use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim} for {kind} grid (line requires 1, radial requires 2..=7)")]
    InvalidDimension { dim: usize, kind: &'static str },
    #[error("invalid grid size: {0}")]
    InvalidSize(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state is zero; cannot project onto the Nehari manifold")]
    ZeroState,
    #[error("no positive Nehari scaling exists (quartic moment is zero and cubic term is {cubic})")]
    NoPositiveRoot { cubic: f64 },
    #[error("state is off the Nehari manifold (|Psi| = {psi:e}, allowed {allowed:e})")]
    OffManifold { psi: f64, allowed: f64 },
    #[error("degenerate initialization: {0}")]
    DegenerateInit(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("weighted quotient denominator is not positive ({0:e})")]
    NonPositiveWeight(f64),
    #[error("operation requires a line grid")]
    RequiresLineGrid,
    #[error("profile does not fit the target grid: {0}")]
    Support(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
