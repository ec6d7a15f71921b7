use thiserror::Error;

use crate::grid::Grid;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: N={left} vs N={right}")]
    GridMismatch { left: usize, right: usize },
    #[error("convolution oracle refused on N={n} (limit is 16)")]
    OracleTooLarge { n: usize },
    #[error("excluded exponent triple ({0}, {1}, {2})")]
    ExcludedExponents(f64, f64, f64),
    #[error("resolvent iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<LabError>,
    },
    #[error("explicit integrator unstable at step {step}: norm grew by {growth:e}")]
    Instability { step: usize, growth: f64 },
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn ensure_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(LabError::GridMismatch {
            left: a.n(),
            right: b.n(),
        })
    }
}
