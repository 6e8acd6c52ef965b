use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Shapes or indices that do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Inconsistent or out-of-range configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Invalid input values (NaN scores, labels out of range).
    #[error("invalid data: {0}")]
    InvalidData(String),
    /// Argument outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A size guard was exceeded.
    #[error("resource error: {0}")]
    Resource(String),
    /// A statistic is undefined for the given sample.
    #[error("degenerate statistics: {0}")]
    Degenerate(String),
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
