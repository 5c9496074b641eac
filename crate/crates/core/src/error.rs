use thiserror::Error;

/// Errors raised by the Gaussian kernel, the source models and the key-rate engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("symplectic eigenvalue {value} is below the physical bound 1")]
    UnphysicalEigenvalue { value: f64 },

    #[error("unphysical state: symplectic spectrum {spectrum:?}")]
    UnphysicalState { spectrum: Vec<f64> },

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("mode index {index} out of range for {n_modes} mode(s)")]
    InvalidMode { index: usize, n_modes: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("Fock series did not converge within {cap} terms")]
    Truncation { cap: usize },

    #[error("estimator quadrature variance {variance:e} is degenerate")]
    DegenerateEstimator { variance: f64 },

    #[error("could not bracket {what}: {detail}")]
    Bracket { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    reason: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
