use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("not a Lévy measure: ∫(1 ∧ |y|²) ν(dy) = {value}")]
    NotLevyMeasure { value: f64 },

    #[error("tail not integrable beyond r = {radius}")]
    TailNotIntegrable { radius: f64 },

    #[error("infinite ball mass: ball B({center:?}, {rho}) covers the origin")]
    InfiniteBallMass { center: Vec<f64>, rho: f64 },

    #[error("infinite second moment")]
    InfiniteSecondMoment,

    #[error("profile is flagged monotone but increases between s = {left} and s = {right}")]
    NonMonotoneProfile { left: f64, right: f64 },

    #[error("radius {value} lies outside the frequency grid [{min}, {max}]")]
    OutsideGrid { value: f64, min: f64, max: f64 },

    #[error("extend frequency grid: level {level} is outside the tabulated range [{min}, {max}] of Ψ")]
    ExtendFrequencyGrid { level: f64, min: f64, max: f64 },

    #[error("increase frequency range: cutoff {needed} exceeds grid limit {available}")]
    IncreaseFrequencyRange { needed: f64, available: f64 },

    #[error("t beyond validity horizon: t = {t} but t_p = {t_p}")]
    BeyondHorizon { t: f64, t_p: f64 },

    #[error("series order {requested} too small for λt = {lambda_t}; need at least {required}")]
    SeriesOrder {
        requested: usize,
        required: usize,
        lambda_t: f64,
    },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("chain undefined below r0: |x| = {norm} < r0 = {r0}")]
    ChainUndefined { norm: f64, r0: f64 },

    #[error("F violates F(s) ≤ Ψ(s)/s at s = {s}: F = {f}, Ψ(s)/s = {bound}")]
    ConditionViolated { s: f64, f: f64, bound: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("no θ passes the near-diagonal scan: {0}")]
    NoPassingTheta(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl LevyError {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        LevyError::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for LevyError {
    fn from(e: std::io::Error) -> Self {
        LevyError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LevyError>;
