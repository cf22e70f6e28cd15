use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} exceeds the factorial table bound {max}")]
    FactorialBound { index: usize, max: usize },

    #[error("Fock truncation {truncation} is too small (tail mass {tail:.3e})")]
    TruncationTooSmall { truncation: usize, tail: f64 },

    #[error("integrand returned a non-finite value at {at:?}")]
    NonFinite { at: Vec<f64> },

    #[error("integration did not converge: {coarse} vs {fine} after refinement")]
    NotConverged { coarse: f64, fine: f64 },

    #[error("no sign change on the bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("accepted fraction {r_acc:.3e} is too small for conditional quantities")]
    ZeroAcceptance { r_acc: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
