//! Spectrogram inversion toolkit.
//!
//! Reconstructs a time-domain signal from the magnitude of its discrete
//! Gabor transform (STFT on a regular time-frequency lattice). The main
//! estimator integrates the phase gradient obtained from the log-magnitude
//! over a magnitude-ordered heap; single-pass, two-pass and masked variants
//! are provided, together with SPSI and Griffin-Lim baselines, error
//! metrics, and a file-oriented benchmark harness.
//!
//! The typical pipeline is:
//!
//! ```text
//! signal -> dgt -> |c| -> log_magnitude -> scaled_phase_gradient
//!        -> heap integration -> synthesize -> signal estimate
//! ```
//!
//! All grids are `channels x frames` (frequency bin varies within a column,
//! one column per analysis frame). Real signals are processed on the
//! non-negative half spectrum and mirrored before synthesis.

pub mod baselines;
pub mod corpus;
pub mod gabor;
pub mod gradient;
pub mod gridio;
pub mod harness;
pub mod metrics;
pub mod pghi;
pub mod wav;

mod error;

pub use error::{Error, HarnessError};

/// Convenience alias for results of core signal-processing operations.
pub type Result<T> = std::result::Result<T, Error>;
