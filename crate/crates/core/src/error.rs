use thiserror::Error;

#[derive(Debug, Error)]
pub enum DnlsError {
    #[error("grid size must be even and at least 8, got {0}")]
    InvalidGridSize(usize),

    #[error("expected {expected} values for this grid, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("field is not zero-mean: |u_0| = {mean_abs:e} exceeds tolerance {tolerance:e}")]
    NotZeroMean { mean_abs: f64, tolerance: f64 },

    #[error("norm exponent must lie in [1, inf], got {0}")]
    InvalidNormExponent(f64),

    #[error("n_modes = {n_modes} must be below n/2 = {half}")]
    TooManyModes { n_modes: usize, half: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bound undefined: Re λ = 0")]
    BoundUndefined,

    #[error("bound infinite: pairing integral vanishes")]
    BoundInfinite,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("total density drifted to {density:e} at t = {t} (tolerance {tolerance:e}); M is no longer meaningful")]
    DensityDrift { t: f64, density: f64, tolerance: f64 },

    #[error("not enough samples: need {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("malformed trajectory data: {0}")]
    MalformedTrajectory(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DnlsError>;
