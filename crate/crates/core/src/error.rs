use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite: pivot {pivot} is {value:.3e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("seed vector must be non-zero")]
    ZeroSeed,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense oracle refused: dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error(
        "splitting system A A^T is singular (pivot {pivot}); retry with a ridge shift of about {recommended_ridge:.3e}"
    )]
    SingularSplit {
        pivot: usize,
        recommended_ridge: f64,
    },

    #[error("objective increased at iteration {iteration}: {previous:.17e} -> {current:.17e}")]
    ObjectiveIncrease {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("outputs of the normal and adjoint samplers differ (relative error {rel_error:.3e})")]
    EquivalenceFailure { rel_error: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

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
