use thiserror::Error;

/// Errors raised by the model, solvers and simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid network or parameter configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed input to an operation (bad index, wrong length).
    #[error("input error: {0}")]
    Input(String),
    /// Parameters outside the domain where a quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative method failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
