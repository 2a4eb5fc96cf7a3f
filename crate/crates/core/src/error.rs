use thiserror::Error;

use crate::dynamics::AmplitudeState;
use crate::interactions::PowerLawFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The power-law fitter ran out of iterations; the best candidate seen so
    /// far is attached.
    #[error("power-law fit did not converge after {iterations} iterations (max error {:.3e})", best.max_error)]
    FitFailed {
        iterations: usize,
        best: Box<PowerLawFit>,
    },

    #[error("integrator failed at t = {:.6e}: {reason}", last.time)]
    Integrator {
        reason: String,
        last: Box<AmplitudeState>,
    },

    #[error("no interior minimum in scan range [{lo:.6e}, {hi:.6e}] (argmin at {at:.6e})")]
    NoMinimum { lo: f64, hi: f64, at: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

/// Rejects NaN and infinities with a named message.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}
