//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MreptError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("admittivity out of admissible range: {0}")]
    Inadmissible(String),

    #[error("assembly error at node ({i}, {j}, {k}): {reason}")]
    Assembly {
        i: usize,
        j: usize,
        k: usize,
        reason: String,
    },

    #[error(
        "linear solver did not converge: residual {residual:.3e} after {iterations} iterations \
         (tol {tol:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("stationary point: gradient vanished while the misfit is {misfit:.3e}")]
    StationaryPoint { misfit: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
