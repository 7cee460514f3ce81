use std::path::PathBuf;

/// Errors shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A mathematical precondition was violated (e.g. `c <= 0`, `Im z <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// An ensemble description is inconsistent (non-integer N, odd N for
    /// the balanced Bernoulli kind, beta >= n, ...).
    #[error("invalid ensemble spec: {0}")]
    Spec(String),

    /// An experiment configuration failed validation; the message names the
    /// offending key.
    #[error("invalid config: {0}")]
    Config(String),

    /// The configuration text could not be parsed at all.
    #[error("config parse error: {0}")]
    Parse(String),

    /// A requested matrix exceeds the supported size.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iterative solver ran out of iterations.
    #[error("{what} did not converge (last residual {residual:.3e})")]
    Convergence { what: String, residual: f64 },

    /// The eigensolver failed on one tridiagonal block.
    #[error("eigensolver failed to converge in block {block}")]
    Eigensolver { block: usize },

    /// Not enough data points for a fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The requested diagnostic is not defined for this ensemble kind.
    #[error("unsupported ensemble: {0}")]
    UnsupportedEnsemble(String),

    /// A cache file had the wrong magic, version, or metadata.
    #[error("cache file rejected: {0}")]
    Cache(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
