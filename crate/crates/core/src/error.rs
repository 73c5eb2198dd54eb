use thiserror::Error;

/// Errors raised by the core transform and reconstruction operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Lattice constraints violated (divisibility, redundancy, zero sizes).
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    /// Window constraints violated (support, width parameter, degenerate samples).
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// The window/lattice pair does not form a frame; no dual window exists
    /// within the configured eigenvalue tolerance.
    #[error("window and lattice do not form a frame (min/max frame eigenvalue ratio {ratio:.3e} below {tol:.3e})")]
    NotAFrame { ratio: f64, tol: f64 },

    /// Grid or signal dimensions do not match the lattice.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input contains NaN or infinite values where finite data is required.
    #[error("non-finite input: {0}")]
    NonFinite(String),
}

/// Errors raised by the file-oriented harness (I/O, formats, job configs).
///
/// The variants group into the three failure classes reported by the CLI:
/// usage errors, I/O errors, and numerical errors.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {reason}")]
    Wav { path: String, reason: String },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("bad job configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] Error),
}

pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}
