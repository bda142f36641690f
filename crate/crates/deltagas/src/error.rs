use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole collision: {0}")]
    Pole(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("series diverges: spectral radius {radius:.6} of the weighted kernel is not below 0.99")]
    Divergence { radius: f64 },
    #[error("contour error: {0}")]
    Contour(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}
