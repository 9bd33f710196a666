use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside the law's regime of validity: {0}")]
    Regime(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("image sum needs {needed} shells but the cap is {cap}")]
    TruncationNotConverged { needed: usize, cap: usize },
    #[error("evaluation point coincides with an image source")]
    LatticeCoincidence,
    #[error("no root of the wavenumber condition in [{lo:.3e}, {hi:.3e}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("null space of the wavenumber matrix has dimension {0}")]
    DegenerateNullSpace(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for problems with the caller's input rather than the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::Regime(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
