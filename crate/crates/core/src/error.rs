use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the solvers report. Numeric payloads are carried as `f64`
/// regardless of the scalar type used for the computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("density has non-positive mass {mass}")]
    NonPositiveMass { mass: f64 },
    #[error("negative density value {value} at sample {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("main solver path requires a positive mean, got m0 = {m0}")]
    NonPositiveMeanRequired { m0: f64 },
    #[error("trait grid is not strictly increasing at sample {index}")]
    UnsortedGrid { index: usize },
    #[error("tabulated mass {mass} is too far from 1 to renormalize")]
    MassMismatch { mass: f64 },
    #[error("tabulated density does not decay at the grid ends (endpoint value {value})")]
    HeavyTail { value: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("cgf argument z = {z} outside certified range [0, {z_max}]")]
    ZOutOfRange { z: f64, z_max: f64 },
    #[error(
        "fixed-point iteration did not converge after {iters} iterations (residual {residual:e})"
    )]
    NoConvergence { iters: usize, residual: f64 },
    #[error("cumulative integral reaches {a_max}, beyond the certified cgf range {z_max}")]
    ZRangeExceeded { a_max: f64, z_max: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    TOutOfRange { t: f64, horizon: f64 },
    #[error("negative time {t}")]
    NegativeTime { t: f64 },
    #[error("inverse variance a0 must be positive, got {a0}")]
    NonPositiveA0 { a0: f64 },
    #[error("time {t} is at or past the blow-up time {t_star}")]
    PastBlowup { t: f64, t_star: f64 },
    #[error("inverse variance exceeded the cap at t = {t}")]
    StiffnessAbort { t: f64 },
    #[error("mean table could not be extended to cover warped time {phi}: {reason}")]
    HorizonExceeded { phi: f64, reason: String },
    #[error("explicit scheme unstable: diffusion number {ratio} exceeds 1/2 at t = {t}")]
    CflViolated { ratio: f64, t: f64 },
    #[error("density {value:e} at the artificial boundary at t = {t}; enlarge the domain")]
    DomainTooSmall { t: f64, value: f64 },
    #[error("time {t} not present in field")]
    TimeMissing { t: f64 },
    #[error("finite-difference solution became non-finite at t = {t}")]
    Diverged { t: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used by the scenario runner's manifests.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveMass { .. } => "NonPositiveMass",
            Error::NegativeDensity { .. } => "NegativeDensity",
            Error::NonPositiveMeanRequired { .. } => "NonPositiveMeanRequired",
            Error::UnsortedGrid { .. } => "UnsortedGrid",
            Error::MassMismatch { .. } => "MassMismatch",
            Error::HeavyTail { .. } => "HeavyTail",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::ZOutOfRange { .. } => "ZOutOfRange",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::ZRangeExceeded { .. } => "ZRangeExceeded",
            Error::TOutOfRange { .. } => "TOutOfRange",
            Error::NegativeTime { .. } => "NegativeTime",
            Error::NonPositiveA0 { .. } => "NonPositiveA0",
            Error::PastBlowup { .. } => "PastBlowup",
            Error::StiffnessAbort { .. } => "StiffnessAbort",
            Error::HorizonExceeded { .. } => "HorizonExceeded",
            Error::CflViolated { .. } => "CflViolated",
            Error::DomainTooSmall { .. } => "DomainTooSmall",
            Error::TimeMissing { .. } => "TimeMissing",
            Error::Diverged { .. } => "Diverged",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
