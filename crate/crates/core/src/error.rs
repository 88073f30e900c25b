use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("iterative estimator did not converge after {iterations} iterations (last estimate {last_estimate})")]
    EstimatorFailure { iterations: usize, last_estimate: f64 },

    #[error("operator is not positive semidefinite: eigenvalue {eigenvalue}")]
    NotPsd { eigenvalue: f64 },

    #[error("operator is not strongly positive: minimum eigenvalue {min_eigenvalue} < delta {delta}")]
    NotStronglyPositive { min_eigenvalue: f64, delta: f64 },

    #[error("invalid parameter `{name}` = {value}: {bound}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        bound: String,
    },

    #[error("fixed-point set is empty: residual {residual} exceeds tolerance {tolerance}")]
    EmptyFixedPointSet { residual: f64, tolerance: f64 },

    #[error("affine constraint set is infeasible: residual {residual}")]
    InfeasibleConstraint { residual: f64 },

    #[error("iterate diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("variant mismatch: {0}")]
    VariantMismatch(String),

    #[error("unsupported problem shape: {0}")]
    UnsupportedProblem(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("metric corruption: squared norm evaluated to {0}")]
    MetricCorruption(f64),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, bound: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            bound: bound.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
