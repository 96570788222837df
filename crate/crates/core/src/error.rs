use thiserror::Error;

/// Errors raised by the numerical layers of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("density operator trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("density operator has negative eigenvalue {0:.3e}")]
    NegativeEigenvalue(f64),

    #[error("state derivative has non-zero trace {0:.3e}")]
    NotTraceless(f64),

    #[error("degenerate family: no eigenvalue pair sum exceeds the cutoff {0:.1e}")]
    DegenerateFamily(f64),

    #[error("ill-conditioned Gram matrix (condition number {condition:.3e}, rank {rank} of {candidates} candidate vectors)")]
    IllConditioned {
        condition: f64,
        rank: usize,
        candidates: usize,
    },

    #[error(
        "degenerate two-target point dt = domega = 0: the QFI limit depends on the approach direction; \
         perturb dt or domega, or take an axis limit explicitly"
    )]
    DegeneratePoint,

    #[error("mismatched states: {0}")]
    MismatchedStates(&'static str),

    #[error("eigen-decomposition did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("parameter not identifiable: {0}")]
    NonIdentifiable(&'static str),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
