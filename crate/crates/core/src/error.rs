//! Error types shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("numerically singular system (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("matrix has full numerical rank (best |A v| = {achieved:.3e}, tolerance {tol:.3e})")]
    FullRank { achieved: f64, tol: f64 },

    #[error("generator kernel is degenerate (dimension > 1); steady state is not unique")]
    DegenerateKernel,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operation `{op}` does not support scheme kind {kind}")]
    UnsupportedKind { op: &'static str, kind: &'static str },

    #[error("integrator step size underflow at t = {time:.6e}")]
    StepSizeUnderflow { time: f64 },

    #[error("trace drifted by {drift:.3e} at t = {time:.6e}; integration aborted")]
    TraceDrift { time: f64, drift: f64 },

    #[error("heating-dominated configuration: net cooling rate {net:.3e} <= 0")]
    HeatingDominated { net: f64 },

    #[error("closed-form denominator singular at omega = {omega:.6e}")]
    SingularPoint { omega: f64 },
}
