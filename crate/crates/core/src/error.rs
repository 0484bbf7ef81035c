use thiserror::Error;

/// Errors raised by the special-function, rate, matrix and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge after {terms} terms: {what}")]
    NonConvergence { what: String, terms: usize },

    #[error("pole encountered: {0}")]
    Pole(String),

    #[error("capacity exceeded: {what} has size {size}, limit is {limit}")]
    Capacity {
        what: String,
        size: u128,
        limit: u128,
    },

    #[error("non-real spectrum: max |Im| = {max_imag:e} exceeds {tol:e}")]
    NonRealSpectrum { max_imag: f64, tol: f64 },

    #[error("eigensolver failed to converge on a {0}x{0} matrix")]
    EigenConvergence(usize),

    #[error("stationary kernel is not one-dimensional (min pivot ratio {0:e})")]
    NonUniqueKernel(f64),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
