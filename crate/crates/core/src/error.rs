use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (deviation {deviation:.3e} > {tolerance:.1e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("operator is not unitary (deviation {deviation:.3e} > {tolerance:.1e})")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("eigenphase {phase:.12} lies on the logarithm branch cut at -pi")]
    BranchCut { phase: f64 },

    #[error("subsystem index {index} out of range for {count} factors")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("grid too coarse: {points} points, need at least {min}")]
    GridTooCoarse { points: usize, min: usize },

    #[error("lattice wrap-around margin violated: {0}")]
    WrapAround(String),

    #[error("initial excitation {excitation} exceeds truncation {truncation}")]
    ExcitationOverflow { excitation: usize, truncation: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
