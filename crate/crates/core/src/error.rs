use thiserror::Error;

/// Errors raised by the solvers, test builders and simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sequence value does not fit in an `f64`.
    #[error("sequence overflow at index {index}")]
    SequenceOverflow { index: usize },

    /// The requested radius admits no bracketing multiplier.
    #[error("radius outside solvable range: {0}")]
    RadiusOutOfRange(String),

    /// An iterative routine stopped without meeting its tolerance.
    #[error("no convergence after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    /// A kernel or statistic left the representable range.
    #[error("numeric overflow: {0}")]
    Overflow(String),

    /// The problem or test description is malformed.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The requested operation does not apply to this regime.
    #[error("unsupported regime: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors caused by the input description rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_) | Error::Domain(_) | Error::Unsupported(_) | Error::RadiusOutOfRange(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
