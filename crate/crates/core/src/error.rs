use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e} after {intervals} intervals")]
    NonConvergent {
        estimate: f64,
        tolerance: f64,
        intervals: usize,
    },

    #[error("negative density {value:e} sampled at r = {radius:e}")]
    NegativeDensity { radius: f64, value: f64 },

    #[error("mass {mass:e} outside the tabulated range [0, {max:e}]")]
    OutOfRange { mass: f64, max: f64 },

    #[error("source mass {source_mass:e} exceeds the target's total mass {target_mass:e}")]
    TargetExhausted { source_mass: f64, target_mass: f64 },

    #[error("profile is not strictly decreasing at node {index} (r = {radius:e})")]
    NotDecreasing { index: usize, radius: f64 },

    #[error("admissibility margin {worst_margin:e} is negative at r = {radius:e}")]
    NotAdmissible { worst_margin: f64, radius: f64 },

    #[error("exterior mass {mass:e} is not below 8*pi*(1 - alpha) = {limit:e}")]
    MassTooLarge { mass: f64, limit: f64 },

    #[error("boundary value {profile:e} does not match the bubble value {bubble:e} (tolerance {tolerance:e})")]
    BoundaryMismatch {
        profile: f64,
        bubble: f64,
        tolerance: f64,
    },

    #[error("profile mass {profile:e} does not match the bubble mass {bubble:e} (tolerance {tolerance:e})")]
    MassMismatch {
        profile: f64,
        bubble: f64,
        tolerance: f64,
    },

    #[error("generated profile violates its admissibility certificate: worst margin {worst_margin:e} at r = {radius:e}")]
    GeneratorFailed { worst_margin: f64, radius: f64 },

    #[error("the north pole has no stereographic image")]
    AtPole,

    #[error("conical order {order} is outside (-1, 0)")]
    OrderOutOfRange { order: f64 },

    #[error("shooting did not converge: {0}")]
    NoConvergence(String),

    #[error("total mass {rho:e} is not below the supremum {limit:e}")]
    RhoOutOfRange { rho: f64, limit: f64 },

    #[error("gamma = {gamma} does not exceed beta/8pi - 1 = {threshold}: the weight is subharmonic everywhere")]
    SubharmonicRegime { gamma: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
