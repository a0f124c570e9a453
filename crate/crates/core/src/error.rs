use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("envelope not normalized: integral of f^2 is {norm}")]
    NotNormalized { norm: f64 },

    #[error("covariance matrix is not physical (min eigenvalue of sigma + form = {min_eig:e})")]
    NonPhysical { min_eig: f64 },

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("quadrature did not converge: estimated error {achieved:e} above target {target:e}")]
    QuadratureNonConvergence { achieved: f64, target: f64 },

    #[error("maximizer {mu_hat} sits on the bracket edge [{lo}, {hi}]")]
    BracketEdge { mu_hat: f64, lo: f64, hi: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by bad inputs rather than a numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Domain(_) | Error::UnknownMode(_) | Error::NotNormalized { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
