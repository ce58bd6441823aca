use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function has a pole at x = {0}")]
    GammaPole(f64),

    #[error("exponent {exponent} is out of range: {reason}")]
    ExponentOutOfRange { exponent: f64, reason: &'static str },

    #[error("power sum has a negative exponent {exponent} and cannot be evaluated at t = 0")]
    SingularEvaluation { exponent: f64 },

    #[error("fractional order alpha = {0} must lie in (1, 2]")]
    InvalidOrder(f64),

    #[error("condition (H) violated: alpha - beta + lambda_min = {margin} <= 0")]
    ConditionHViolated { margin: f64 },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
