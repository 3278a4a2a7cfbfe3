use thiserror::Error;

/// Failure modes of the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A precondition on an operator or state was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A numerical routine failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The state norm drifted beyond the allowed bound during propagation.
    #[error("integration failure at t = {time}: norm deviation {deviation:e} (try a smaller dt)")]
    IntegrationFailure { time: f64, deviation: f64 },
    /// The requested Hilbert space is too large for the configured bound.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::IntegrationFailure { .. })
    }
}
