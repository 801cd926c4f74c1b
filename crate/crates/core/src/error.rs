use thiserror::Error;

/// Errors raised anywhere in the assembly → reduction → estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameter domain [{min}, {max}]: {reason}")]
    Domain { min: f64, max: f64, reason: String },

    #[error("moment matrix factorization degenerated: {0}")]
    Moments(String),

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("IRKA did not converge after {iterations} iterations (last shifts: {shifts:?})")]
    IrkaNotConverged { iterations: usize, shifts: Vec<(f64, f64)> },

    #[error("projection is ill-conditioned: cond(WᵀV) = {0:e}")]
    IllConditioned(f64),

    #[error("reduced model is not Hurwitz (max real part of spectrum {0:e})")]
    NotHurwitz(f64),

    #[error("discrete model is unstable (spectral radius {0})")]
    Unstable(f64),

    #[error("simulation diverged at step {step}: |x| = {norm:e}")]
    Diverged { step: usize, norm: f64 },

    #[error("invalid input signal: {0}")]
    Input(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("innovation covariance is not positive ({0:e}); check Q, R and the state scaling")]
    Innovation(f64),

    #[error("invalid estimator setting: {0}")]
    Estimator(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model document: {0}")]
    Document(String),

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
