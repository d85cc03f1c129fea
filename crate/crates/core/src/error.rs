//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors returned by the arithmetic, trace and statistics layers.
///
/// Cache problems are split into [`Error::CacheCorrupt`] (an existing file
/// that fails its checksum or shape checks) and ordinary I/O, so callers can
/// distinguish "rebuild" from "report".
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a discriminant (need d > 0, d = 0,1 mod 4, d not a perfect square)")]
    NotADiscriminant(u64),

    #[error("trace must exceed 2, got {0}")]
    TraceTooSmall(u64),

    #[error("n_max must be at least {min}, got {got}")]
    RangeTooSmall { min: u64, got: u64 },

    #[error("{name} = {value} out of range: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "L-series truncation {truncation} cannot reach error {target:.3e} for d = {d} (bound {bound:.3e}); need at least {required} terms"
    )]
    PrecisionUnreachable {
        d: u64,
        truncation: u64,
        target: f64,
        bound: f64,
        required: u64,
    },

    #[error(
        "amplitude table covers n <= {have} but the window needs n <= {need} (ceil(e^(pi L)))"
    )]
    TableTooShort { have: u64, need: u64 },

    #[error("sample lengths differ: {values} values vs {weights} weights")]
    LengthMismatch { values: usize, weights: usize },

    #[error("variance regime violated: pi*L = {pil:.4} must stay below log T = {logt:.4}")]
    RegimeViolation { pil: f64, logt: f64 },

    #[error(
        "quadrature step {step:.6e} too coarse: step * max log-norm must not exceed pi/4 (need step <= {required:.6e})"
    )]
    QuadratureStepTooCoarse { step: f64, required: f64 },

    #[error("need at least {min} Monte-Carlo samples, got {got}")]
    TooFewSamples { min: u64, got: u64 },

    #[error(
        "relation search bounds out of range: n_max = {n_max} (3..=500), k_max = {k_max} (2..=4)"
    )]
    RelationBounds { n_max: u64, k_max: u32 },

    #[error("eigenvalue file {path}, line {line}: {reason}")]
    EigenvalueParse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("eigenvalue list is empty or not strictly ascending")]
    BadEigenvalueList,

    #[error("cache file {path} is corrupt: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
