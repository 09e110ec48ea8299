use thiserror::Error;

/// Failures raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported impedance order {0} (only 0 and 1 are implemented)")]
    UnsupportedOrder(u32),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("signal must start from zero (first sample is {0})")]
    NonzeroInitialData(f64),

    #[error("ill-conditioned matching system (condition number {0:e})")]
    IllConditioned(f64),

    #[error("grid spacing {h} does not resolve the skin layer; need h <= {required}")]
    UnresolvedLayer { h: f64, required: f64 },

    #[error("CFL violated: dt = {dt} exceeds {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("spectral tail {tail:e} above threshold {threshold:e} at k_max = {k_max}")]
    Bandwidth {
        tail: f64,
        threshold: f64,
        k_max: f64,
    },

    #[error("{what} did not converge: change {achieved:e} above tolerance {tol:e}")]
    Unconverged {
        what: &'static str,
        achieved: f64,
        tol: f64,
    },

    #[error("solver failed at k = {k}: {source}")]
    AtFrequency {
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("must be finite and positive, got {value}"),
        ))
    }
}
