use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interconnection is not well posed (smallest singular value {sigma_min:.3e})")]
    WellPosedness { sigma_min: f64 },

    #[error("eigenvalue iteration did not converge within {budget} sweeps")]
    Convergence { budget: usize },

    #[error("no horizon up to {t_max} meets the tail bound: {reason}")]
    Horizon { t_max: usize, reason: String },

    #[error("system is not stable: {0}")]
    Stability(String),

    #[error("numerical breakdown in simplex: {0}")]
    Numerical(String),

    #[error("simplex iteration limit of {0} pivots reached")]
    IterationLimit(usize),

    #[error("attack verification failed: expected impact {expected}, observed {observed}, stealth violation {violation:?}")]
    VerificationMismatch {
        expected: f64,
        observed: f64,
        violation: Option<(usize, usize)>,
    },

    #[error("synthesis invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
