use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum KvError {
    #[error("unknown manifold kind `{0}`")]
    UnknownManifoldKind(String),

    #[error("resolution {got:?} invalid for {kind}: expected {expected} directions, each >= {min}")]
    InvalidResolution {
        kind: &'static str,
        got: Vec<usize>,
        expected: usize,
        min: usize,
    },

    #[error("periodic direction {dir} of {kind} needs an even node count for pole identification, got {n}")]
    OddPeriodicResolution { kind: &'static str, dir: usize, n: usize },

    #[error("perturbation amplitude {0} outside [0, 0.5]; larger amplitudes risk a non-positive-definite metric")]
    PerturbationOutOfRange(f64),

    #[error("metric not positive-definite at node {node}")]
    NonPositiveDefinite { node: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("manifold is not Einstein (deviation {deviation:.3e} > tolerance {tolerance:.3e})")]
    NotEinstein { deviation: f64, tolerance: f64 },

    #[error("Einstein-case computation needs positive scalar curvature, got R = {0}")]
    NonPositiveScalarCurvature(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iterative solver `{solver}` did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("spectral decomposition incomplete: {available} of {required} eigenpairs available")]
    IncompleteDecomposition { available: usize, required: usize },

    #[error("non-finite value encountered at t = {t} (step {step})")]
    Instability { t: f64, step: usize },

    #[error("CFL violation: dt {dt:.3e} exceeds advective limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("vanishing norm: field became numerically zero at t = {0}")]
    VanishingNorm(f64),

    #[error("run not converged: tail energy {tail:.3e} above threshold {threshold:.3e}")]
    NotConverged { tail: f64, threshold: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, KvError>;

impl KvError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KvError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        KvError::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
