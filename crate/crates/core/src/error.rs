use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    /// Gram matrix of the subspace generators is not numerically PSD.
    #[error("ill-conditioned subspace: {0}")]
    Conditioning(String),

    /// The retained subspace does not span the derivative directions.
    #[error("span error: projection residual {residual:e} exceeds bound {bound:e}")]
    Span { residual: f64, bound: f64 },

    /// A numerical post-condition was violated.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
