use thiserror::Error;

/// Errors surfaced by the library.
///
/// The CLI maps these onto process exit codes: data problems exit with 3,
/// numerical failures with 4 (usage errors are handled by the argument
/// parser and exit with 2).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its legal domain (coordinates, alpha
    /// ranges, zero sizes, degenerate histograms).
    #[error("input domain: {0}")]
    InputDomain(String),

    /// Matrix/vector shapes that cannot be combined.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A solver produced NaN/overflow or failed to make progress.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed dataset, checkpoint, or report files.
    #[error("data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
