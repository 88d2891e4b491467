use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "assumption A1 violated: companion spectral radius {radius:.6} is not below 1 - margin ({margin:e})"
    )]
    Unstable { radius: f64, margin: f64 },

    #[error("{what} is not symmetric positive definite")]
    NotPositiveDefinite { what: String },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("series did not converge: {0}")]
    Divergence(String),

    #[error("simulated path overflowed at t = {t} (|y_t|_inf = {magnitude:e})")]
    Overflow { t: usize, magnitude: f64 },

    #[error("Cholesky factorization of H_t failed at t = {t}")]
    CholeskyFailure { t: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("side condition violated: {what} (lhs = {lhs:e}, rhs = {rhs:e})")]
    SideCondition { what: String, lhs: f64, rhs: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate regularization path: {0}")]
    DegeneratePath(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is caused by bad input rather than by numerics
    /// going wrong on valid input.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Eigen(_)
                | Error::Divergence(_)
                | Error::Overflow { .. }
                | Error::CholeskyFailure { .. }
                | Error::DegeneratePath(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Format(e.to_string())
    }
}
