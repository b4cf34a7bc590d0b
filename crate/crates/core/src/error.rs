use thiserror::Error;

/// Errors raised by the simulation, law evaluation and invariant construction code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid affine map: {0}")]
    InvalidMap(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time step {dt:e} exceeds the stability limit {max:e}")]
    StepTooLarge { dt: f64, max: f64 },

    #[error("invalid wavenumber: {0}")]
    InvalidWavenumber(String),

    #[error("map is not a proper rotation (det = {det})")]
    NotARotation { det: f64 },

    #[error("history underflow: need {needed} states, have {available}")]
    HistoryUnderflow { needed: usize, available: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("evolution diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("ill-conditioned extrapolation: {0}")]
    IllConditioned(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
