//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid or region construction failed (degenerate box, bad node counts).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A coefficient field violated a structural bound. The message names
    /// the broken constraint (ellipticity, |b|² ≤ Λ, d ≤ 0, d² ≤ Λ).
    #[error("coefficient bound violated: {0}")]
    CoefficientBound(String),

    /// Precondition of an operation failed (mismatched grids, bad parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A direct factorization hit a zero/singular pivot.
    #[error("singular pivot at row {row}")]
    SingularPivot { row: usize },

    /// An iterative solve did not reach tolerance.
    #[error("{method} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A time-marching solve failed; carries the failing time level.
    #[error("time step {level} failed: {source}")]
    TimeStep {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    /// A cell-problem fixed-point iteration did not close up.
    #[error("cell problem not periodic after {periods} periods (gap {gap:.3e})")]
    CellNotConverged { periods: usize, gap: f64 },

    /// One sample of a Monte-Carlo run failed.
    #[error("sample {index} failed: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Oscillations too fast for the grid (fewer than the required cells per period).
    #[error("under-resolved: {0}")]
    UnderResolved(String),

    /// Configuration file rejected.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code: 2 config, 3 numerics, 4 io.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::InvalidGrid(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}
