use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("asymmetric distance: d({i},{j}) = {dij} but d({j},{i}) = {dji}")]
    Asymmetry { i: usize, j: usize, dij: f64, dji: f64 },

    #[error("negative distance d({i},{j}) = {value}")]
    NegativeDistance { i: usize, j: usize, value: f64 },

    #[error("nonzero self-distance d({0},{0}) = {1}")]
    NonzeroDiagonal(usize, f64),

    #[error("triangle inequality violated for ({i},{j},{k}): {dik} > {dij} + {djk}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        dij: f64,
        djk: f64,
    },

    #[error("{what}: size {size} exceeds limit {limit}")]
    SizeLimitExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("degenerate covariance: squared distance {value} between {i} and {j}")]
    DegenerateCovariance { i: usize, j: usize, value: f64 },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("covariance factorization failed after jitter escalation (last jitter {jitter:e})")]
    FactorizationFailure { jitter: f64 },

    #[error("pair ({0},{1}) has zero canonical distance")]
    ZeroDistancePair(usize, usize),

    #[error("sequence is not admissible: {0}")]
    AdmissibilityViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty set")]
    EmptySet,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    #[error("absolute continuity violated: atom {0} carries mass where the reference has none")]
    AbsoluteContinuity(usize),

    #[error("bad spin configuration: {0}")]
    BadConfiguration(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} check(s) failed")]
    CheckFailure(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::CheckFailure(_) => 1,
            _ => 2,
        }
    }
}
