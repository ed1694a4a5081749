use thiserror::Error;

/// Failure modes shared by the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite value produced (treated as escape)")]
    Overflow,
    #[error("point is not in the parabolic basin ({0})")]
    NotInBasin(BasinMiss),
    #[error("iteration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("orbit left the region S(eps, R) at step {0}")]
    OrbitLeftRegion(usize),
    #[error("pole or branch point of the arctan coordinate")]
    Pole,
    #[error("singular matrix")]
    Singular,
    #[error("Newton iteration failed: {0}")]
    NewtonFailed(String),
    #[error("{0}")]
    Io(String),
}

/// Why a point was rejected from the basin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasinMiss {
    Escaped(usize),
    BoundedOther,
}

impl std::fmt::Display for BasinMiss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasinMiss::Escaped(n) => write!(f, "escaped at step {n}"),
            BasinMiss::BoundedOther => write!(f, "bounded, not attracted within budget"),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
