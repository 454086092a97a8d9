use thiserror::Error;

/// Errors raised anywhere in the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument lies outside the documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested (window, norm, parameters) combination is not covered by
    /// any known large-time result.
    #[error("uncovered combination: missing hypothesis `{hypothesis}`")]
    Uncovered { hypothesis: String },

    /// A scenario or window was constructed in violation of its hypotheses.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A field does not cover the region a norm was asked for.
    #[error("region [{lo}, {hi}] not covered by grid [{grid_lo}, {grid_hi}]")]
    NotCovered {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    /// Quadrature or series evaluation failed to reach its accuracy budget.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A built object violates one of its structural invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
