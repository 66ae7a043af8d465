use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a mathematical precondition (negative distance,
    /// frequency outside the absorption window, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Positions or angles degenerate (coincident points, target behind the
    /// reflecting surface).
    #[error("degenerate geometry: {0}")]
    Geometry(String),

    /// A scenario or sweep configuration is inconsistent or unparsable.
    #[error("configuration error: {0}")]
    Config(String),

    /// The inner convex solver or an outer algorithm failed to produce a
    /// usable iterate.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Problem size exceeds a brute-force cost guard.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}
