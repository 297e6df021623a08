use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator.
///
/// Invariant breaches (`InfeasibleDistance`, `StrainLimitBreach`, ...) mean a
/// barrier was evaluated outside its domain; the line-search filters are
/// supposed to make those unreachable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("barrier evaluated at non-positive squared distance {d_sq:e} (offset {xi:e})")]
    InfeasibleDistance { d_sq: f64, xi: f64 },

    #[error("singular value {sigma} reached strain limit {limit}")]
    StrainLimitBreach { sigma: f64, limit: f64 },

    #[error("barrier strain argument {value} reached its limit {limit}")]
    EtaLimitBreach { value: f64, limit: f64 },

    #[error("CCD query started with non-positive gap {gap:e}")]
    CcdStartGap { gap: f64 },

    #[error("degenerate {kind} element {index}")]
    DegenerateElement { kind: &'static str, index: usize },

    #[error("line search step underflow (alpha = {alpha:e}) at Newton iteration {iteration}")]
    LineSearchUnderflow { alpha: f64, iteration: usize },

    #[error("step {step} did not converge in {iterations} Newton iterations")]
    Unconverged { step: usize, iterations: usize },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("missing mesh file {0}")]
    MissingMesh(PathBuf),

    #[error("initial configuration infeasible: {0}")]
    InitialIntersection(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
