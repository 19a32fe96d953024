use thiserror::Error;

use crate::integrator::Trajectory;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("equilibrium relation has no root on (0, 1)")]
    NoRoot,

    #[error("equilibrium relation has {0} bracketed roots on (0, 1)")]
    MultipleRoots(usize),

    #[error("backward orbit left the admissible box at t = {t}")]
    IntegrationDiverged { t: f64 },

    /// The state became NaN or infinite. `prefix` holds everything recorded
    /// up to the last finite state.
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, prefix: Box<Trajectory> },

    #[error("insufficient data: need at least {required} samples, got {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("insufficient tail: need at least {required} samples with N >= {n_min}, got {available}")]
    InsufficientTail {
        n_min: u64,
        required: usize,
        available: usize,
    },

    #[error("degenerate normal-form scaling: 1 - beta - 3 alpha* = {0:e}")]
    DegenerateScaling(f64),

    #[error("time scale P is undefined for mu_hat = {0:e}")]
    UndefinedScale(f64),

    /// Both scaled noise intensities vanish, so κ is undefined. `limit` is the
    /// deterministic limit of Φ(−κ) (0 for μ̂ > 0, 1 for μ̂ < 0), absent when
    /// μ̂ = 0 as well.
    #[error("zero noise: kappa is undefined")]
    ZeroNoise { limit: Option<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
