use thiserror::Error;

/// Errors raised by the numerical kernel, codecs and key agreement.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape: {0}")]
    Shape(String),
    #[error("degenerate: zero matrix has no normalized powers")]
    Degenerate,
    #[error("overflow: non-finite intermediate in matrix power")]
    Overflow,
    #[error("nonfinite: value is NaN or infinite")]
    NonFinite,
    #[error("format: {0}")]
    Format(String),
    #[error("degenerate-keys: both matrix public keys serialize identically")]
    DegenerateKeys,
    #[error("singular: normal equations could not be factored")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
