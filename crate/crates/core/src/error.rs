use alloc::string::String;

/// Failure classes shared by every module.
///
/// The CLI maps these onto process exit codes, so the variants are coarse on
/// purpose: callers branch on the class, the message is for humans.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Floating point ran out of precision (vanishing mass, non-positive determinant).
    #[error("precision error: {0}")]
    Precision(String),
    /// A configured budget was exhausted (attempts, enumeration size, grid width).
    #[error("resource error: {0}")]
    Resource(String),
    /// A computed quantity violated an invariant it must satisfy.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! precision {
    ($($arg:tt)*) => { $crate::error::Error::Precision(alloc::format!($($arg)*)) };
}
macro_rules! resource {
    ($($arg:tt)*) => { $crate::error::Error::Resource(alloc::format!($($arg)*)) };
}
macro_rules! internal {
    ($($arg:tt)*) => { $crate::error::Error::Internal(alloc::format!($($arg)*)) };
}
pub(crate) use {domain, internal, precision, resource};
