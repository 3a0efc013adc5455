use thiserror::Error;

/// Errors produced by the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions"
    )]
    NonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("pole of the gamma function at {0}")]
    Pole(f64),

    #[error(
        "no bracket for target {target:e}: curve spans [{low_value:e}, {high_value:e}] over [{low:e}, {high:e}]"
    )]
    Bracket {
        target: f64,
        low: f64,
        high: f64,
        low_value: f64,
        high_value: f64,
    },

    #[error("curve never crosses {target:e}: observed range [{min:e}, {max:e}]")]
    NoCrossing { target: f64, min: f64, max: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that signal numerical non-convergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Divergence(_) | Error::Bracket { .. }
        )
    }
}
