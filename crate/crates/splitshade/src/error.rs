//! Crate-wide error type.

/// Errors produced by loading, configuration and pipeline stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input file, with a line number when one is known.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Malformed binary payload or unsupported format variant.
    #[error("format error: {0}")]
    Format(String),

    /// Caller-supplied configuration violates a precondition.
    #[error("configuration error: {0}")]
    Config(String),

    /// Buffer shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Geometrically or numerically degenerate input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An internal invariant was violated; this is a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for the CLI: 2 usage/config, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Internal(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
