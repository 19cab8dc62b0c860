use thiserror::Error;

/// Errors for scenario-UCB operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lengthscale must be positive, got {0}")]
    NonPositiveLengthscale(f64),

    #[error("grid points must be pairwise distinct (points {0} and {1} coincide)")]
    DuplicateGridPoint(usize, usize),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("index {index} out of bounds for {what} of length {len}")]
    IndexOutOfBounds {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("{param} must lie in {range}, got {value}")]
    ParamRange {
        param: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("matrix is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("re-draw schedule must satisfy 1 <= alpha(t) <= t; alpha({t}) = {alpha}")]
    InvalidSchedule { t: usize, alpha: f64 },

    #[error("unsupported distribution spec: {0}")]
    Distribution(String),

    #[error("mismatched lengths: {what} has {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("numerical failure at iteration {t}: {source}")]
    AtIteration {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("underpowered configuration: {need} repetitions required for 3-sigma resolution of threshold {threshold}, got {got}")]
    Underpowered {
        threshold: f64,
        need: usize,
        got: usize,
    },
}

impl Error {
    /// Annotate a propagated error with the iteration that produced it.
    pub fn at_iteration(self, t: usize) -> Self {
        Error::AtIteration {
            t,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
