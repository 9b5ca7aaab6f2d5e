use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient vector has length {got}, basis expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shape is not star-shaped about the origin (min radius {min_radius:.3e})")]
    NotStarShaped { min_radius: f64 },

    #[error("perturbation too large: {0}")]
    DeformationTooLarge(String),

    #[error("root finding failed to bracket: {0}")]
    NoBracket(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: String, iterations: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("degenerate mesh: {0}")]
    Mesh(String),

    #[error("eigenvalue multiplicity detected: {0}")]
    Deflation(String),

    #[error("formula disagreement: {0}")]
    FormulaMismatch(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("internal check failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
