//! E-values, e-processes, and a Monte Carlo laboratory for anytime-valid
//! sequential inference.
//!
//! The crate is organized around a small set of ideas:
//!
//! - [`evcore`] holds the algebra of e-values and e-processes: products,
//!   convex mixtures, conversion to p-values, Ville-threshold crossing,
//!   evaluation at stopping times, and the dominating-likelihood-ratio
//!   construction on finite spaces.
//! - [`families`] builds concrete e-statistics: likelihood-ratio processes,
//!   Gaussian betting factors, betting processes for bounded means,
//!   universal inference and the method of mixtures, the right-Haar t-test
//!   Bayes factor, and the generalized likelihood ratio baseline.
//! - [`calibrate`] converts p-values to e-values and back, and implements
//!   Fisher's combination method as a baseline.
//! - [`compress`] tests the fair-coin null by sequential compression with a
//!   Krichevsky-Trofimov coder, plus an adapter for external byte codecs.
//! - [`simlab`] estimates validity, Ville coverage, and growth rates by
//!   reproducible Monte Carlo, and replays optional-continuation and
//!   p-hacking protocols.
//!
//! Capital accumulation is done in natural-log space with explicit
//! absorbing-zero and infinity states, so products of hundreds of factors
//! neither underflow nor overflow silently.

pub mod calibrate;
pub mod compress;
pub mod evcore;
pub mod families;
pub mod numeric;
pub mod simlab;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum EvError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("weights sum to {sum:.17}, exceeding 1")]
    WeightSumExceedsOne { sum: f64 },

    #[error("not an e-variable for the base measure: mean {mean:.17} exceeds 1")]
    MeanExceedsOne { mean: f64 },

    #[error("quadrature failed to converge (relative tolerance {rel_tol:e})")]
    QuadratureNonConvergence { rel_tol: f64 },

    #[error("stopping rule consulted index {index} beyond revealed prefix of length {prefix}")]
    PrefixViolation { index: usize, prefix: usize },

    #[error("strategy emitted lambda {lambda} outside [{lo}, {hi}]")]
    LambdaOutOfRange { lambda: f64, lo: f64, hi: f64 },

    #[error("data point {value} at index {index} outside [0, 1]")]
    DataOutOfRange { index: usize, value: f64 },

    #[error("non-binary symbol {value} at index {index}")]
    NonBinarySymbol { index: usize, value: u8 },

    #[error("compressor adapter '{name}' failed: {message}")]
    AdapterFailure { name: String, message: String },

    #[error("replication {rep} failed: {source}")]
    Replication {
        rep: usize,
        #[source]
        source: Box<EvError>,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, EvError>;
