//! Error type shared by all modules.

use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by the physics and analysis layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition.
    Domain(&'static str),
    /// A Boltzmann mode sum could not reach the requested tail weight
    /// before hitting the mode cap.
    Truncation {
        /// Tail weight actually achievable at the cap.
        achieved: f64,
        /// Tail weight that was requested.
        requested: f64,
    },
    /// The request exceeds a hard resource cap (e.g. Hilbert-space size).
    Resource(&'static str),
    /// An internal numerical routine failed to converge or produced
    /// non-finite values.
    Numerical(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Truncation {
                achieved,
                requested,
            } => write!(
                f,
                "truncation error: tail weight {achieved:.3e} at mode cap, {requested:.3e} requested"
            ),
            Error::Resource(msg) => write!(f, "resource limit: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
