use thiserror::Error;

/// Errors produced by the estimators, the eigenvalue map and the samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate scale{}", match .index { Some(i) => format!(" in column {i}"), None => String::new() })]
    DegenerateScale { index: Option<usize> },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("rank deficient spectrum: {nonzero} nonzero value(s), at least 2 required")]
    RankDeficient { nonzero: usize },

    #[error("{routine} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        routine: &'static str,
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("shape matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {reps} replications failed; first error: {first}")]
    AllReplicationsFailed { reps: usize, first: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
