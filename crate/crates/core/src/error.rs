//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Domain violations (an argument
//! outside its mathematical domain) and numerical events (a path that never
//! absorbs before the configured cutoff, a tracked point swallowed by the
//! hull) are separate variants so callers can react differently: a domain
//! error is a caller bug, a cutoff or swallow event is a legitimate outcome
//! that must be reported rather than silently truncated.

use thiserror::Error;

/// Errors produced by the simulation and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A statistic was requested over an empty sample collection.
    #[error("empty sample collection")]
    EmptySamples,

    /// A simulated path did not absorb before the configured time cutoff.
    #[error("no absorption before the time cutoff t = {max_time}")]
    CutoffExceeded {
        /// The configured cutoff that was reached.
        max_time: f64,
    },

    /// A tracked point was swallowed by the growing hull.
    #[error("tracked point swallowed at capacity time t = {t}")]
    PointSwallowed {
        /// Capacity time at which the swallow threshold was crossed.
        t: f64,
    },

    /// Geometric input too degenerate to resolve (e.g. a winding query on a
    /// point lying on the polyline).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// Output file or stream failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a [`Error::Domain`] with a formatted message.
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
