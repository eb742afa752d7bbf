//! Common error type for the library.
//!
//! Validation failures (bad parameters, malformed series) are kept separate
//! from numerical failures (divergent transforms, undefined moments) so the
//! batch front end can map them to distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VvixError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("moments undefined: {0}")]
    MomentsUndefined(String),

    #[error("no valid damping region: {0}")]
    NoDampingRegion(String),

    #[error("characteristic function evaluation returned NaN at v = {v}")]
    CfNan { v: f64 },

    #[error("arbitrage violation: {0}")]
    ArbitrageViolation(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("parameter rejected: {0}")]
    ParameterRejected(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl VvixError {
    /// True when the error reflects bad input rather than a numerical
    /// breakdown encountered mid-computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            VvixError::InvalidParameter(_)
                | VvixError::Domain(_)
                | VvixError::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, VvixError>;
