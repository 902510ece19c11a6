use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("integration diverged at t = {t:.6e}: amplitude magnitude {magnitude:.3e}")]
    Divergence { t: f64, magnitude: f64 },

    #[error("{method} did not converge: best residual {residual:.3e} after {spent:.6e} ({hint})")]
    NotConverged {
        method: &'static str,
        residual: f64,
        spent: f64,
        hint: String,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("vector is not normalized (norm {0:.12})")]
    NotNormalized(f64),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("norm drift {drift:.3e} at t = {t:.6e}; reduce the time step")]
    NormDrift { t: f64, drift: f64 },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(field: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            field: field.into(),
            expected,
            found,
        }
    }
}
