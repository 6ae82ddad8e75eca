use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is out of range [{min}, {max}]")]
    Range {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("non-finite amplitude encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("integration diverged at t = {t}: norm drift {drift:e} exceeds {threshold:e}")]
    Diverged { t: f64, drift: f64, threshold: f64 },

    #[error("initial state is not normalized: |norm - 1| = {drift:e}")]
    NotNormalized { drift: f64 },

    #[error("averaging window starting at t = {t_start} contains no samples")]
    EmptyWindow { t_start: f64 },

    #[error("jump class is empty")]
    EmptyClass,

    #[error("average {0} has |value| >= 1/2, inverse temperature would be infinite")]
    InfiniteBeta(f64),

    #[error("Zeeman frequency is zero, inverse temperature is undefined")]
    ZeroFrequency,

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("{0} spins exceeds the limit of {1} for this operation")]
    TooLarge(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
