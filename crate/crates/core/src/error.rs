use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid construction: {0}")]
    Construction(String),
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
    #[error("operation requires the {expected} backend")]
    Backend { expected: &'static str },
    #[error("element is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("pole marker present in {0}")]
    Pole(&'static str),
    #[error("function `{function}` is undefined at {at}")]
    Domain { function: String, at: f64 },
    #[error("element not invertible at t = {t} (smallest singular value {sigma:.3e})")]
    NonInvertible { t: f64, sigma: f64 },
    #[error("endpoint t = {t} is not invertible (margin {margin:.3e}); regularize the endpoints first")]
    EndpointNotInvertible { t: f64, margin: f64 },
    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("path endpoints do not match (gap {gap:.3e})")]
    EndpointMismatch { gap: f64 },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("invalid spec at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("methods disagree: max discrepancy {max:.3e} exceeds tolerance {tolerance:.3e}")]
    Disagreement { max: f64, tolerance: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Machine-readable reason code.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Construction(_) => "invalid_construction",
            Error::AlgebraMismatch => "algebra_mismatch",
            Error::Backend { .. } => "wrong_backend",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::Pole(_) => "pole_marker",
            Error::Domain { .. } => "domain_error",
            Error::NonInvertible { .. } => "not_invertible",
            Error::EndpointNotInvertible { .. } => "endpoint_not_invertible",
            Error::Quadrature { .. } => "quadrature_not_converged",
            Error::Precondition(_) => "precondition_violated",
            Error::EndpointMismatch { .. } => "endpoint_mismatch",
            Error::Consistency(_) => "internal_consistency",
            Error::Validation { .. } => "validation_error",
            Error::Disagreement { .. } => "method_disagreement",
            Error::Io(_) => "io_error",
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Io(_) => 2,
            Error::Disagreement { .. } => 4,
            _ => 3,
        }
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
