use thiserror::Error;

/// Errors produced by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The eigenvector matrix is (numerically) singular: the input sits at or
    /// near an exceptional point.
    #[error("exceptional point near eigenvalue index {index}: condition estimate {condition:.3e}")]
    ExceptionalPoint { index: usize, condition: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),

    #[error("empty energy window (per-realization counts: {counts:?})")]
    EmptyWindow { counts: Vec<usize> },

    #[error("ambiguous asymptote: slowest-decay rate shared by indices {indices:?}")]
    AmbiguousAsymptote { indices: Vec<usize> },

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("retry budget exhausted for N={n_modes}: {rejected} realizations rejected")]
    RetryBudgetExhausted { n_modes: usize, rejected: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::UnsupportedBasis(_)
            | Error::Config(_)
            | Error::EmptyWindow { .. } => 1,
            Error::ExceptionalPoint { .. }
            | Error::Eigensolver(_)
            | Error::AmbiguousAsymptote { .. }
            | Error::InvalidRegime(_)
            | Error::RetryBudgetExhausted { .. } => 2,
            Error::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
