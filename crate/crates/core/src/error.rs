//! Error type shared by the whole crate.

use alloc::string::String;

/// Errors raised by configuration checks and numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An object was built with inconsistent or out-of-range parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// A routine was called outside its precondition.
    #[error("usage error: {0}")]
    Usage(String),
    /// An iterative solver did not converge.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Max-norm residual at the last iterate.
        residual: f64,
    },
    /// No equilibrium exists for the requested parameters.
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
