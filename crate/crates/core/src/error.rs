use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge for {what}: value {value:e}, error estimate {error:e}")]
    Quadrature { what: String, value: f64, error: f64 },
    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),
    #[error("Cholesky factorization failed: {0}")]
    Cholesky(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what} did not converge; trace {trace:?}")]
    NotConverged { what: String, trace: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn quad(what: impl Into<String>, e: crate::quad::Estimate) -> Self {
        Error::Quadrature { what: what.into(), value: e.value, error: e.error }
    }
}
