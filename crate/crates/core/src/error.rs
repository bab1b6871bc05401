use alloc::string::String;

/// Errors raised by the quantizers, codecs and optimizers in this crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Vector lengths do not match or are not admissible.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// The data handed to an encoder is invalid (NaN, too large a norm, ...).
    #[error("invalid input: {0}")]
    Input(String),
    /// A bit string or symbol stream does not match its layout.
    #[error("codec error: {0}")]
    Codec(String),
    /// Parameters are inconsistent with each other.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
