use thiserror::Error;

/// Errors produced by the chirplike library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `Z^T Z` is singular to working precision.
    #[error("degenerate design matrix (condition estimate {condition:e})")]
    DegenerateDesign { condition: f64 },

    #[error("minimizer did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("stage {stage} ({kind}): {source}")]
    Stage {
        stage: usize,
        kind: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors that come from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DegenerateDesign { .. } | Error::NoConvergence { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
