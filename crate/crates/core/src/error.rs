use thiserror::Error;

/// Errors raised by the library. Check *failures* (an inequality that does not
/// hold) are never errors; they are carried in the returned reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for a space with {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("empty subset")]
    EmptySubset,

    #[error("graph is disconnected: no path between {0} and {1}")]
    Disconnected(usize, usize),

    #[error("invalid probability measure: {0}")]
    InvalidMeasure(String),

    #[error("time {0} is not aligned with a grid of {1} steps")]
    NotGridAligned(f64, usize),

    #[error("marginal mismatch at point {point}: {left} vs {right}")]
    MarginalMismatch { point: usize, left: f64, right: f64 },

    #[error("selection has zero mass")]
    ZeroMass,

    #[error("map undefined on support point {0}")]
    MapUndefined(usize),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("no exact {t}-intermediate measure exists between the given endpoints")]
    NoIntermediate { t: f64 },

    #[error("density cap infeasible at dyadic level {level}: excess {excess:e} at time {time}")]
    CapInfeasible { level: usize, time: f64, excess: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("LP solver failure: {0}")]
    Lp(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_exponent(name: &'static str, q: f64) -> Result<()> {
    if q.is_finite() && q > 1.0 {
        Ok(())
    } else {
        Err(param(name, format!("must lie in (1, inf), got {q}")))
    }
}
