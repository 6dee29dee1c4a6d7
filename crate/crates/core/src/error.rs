use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state fully blocked (pass probability {0:e})")]
    FullyBlocked(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate source: both crystal amplitudes vanish")]
    DegenerateSource,

    #[error("epsilon undefined (pure VV)")]
    EpsilonUndefined,

    #[error("underdetermined fit: {0}")]
    UnderdeterminedFit(String),

    #[error("degenerate fringe: offset {0} is not positive")]
    DegenerateFringe(f64),

    #[error("visibility arguments out of order: r_max {r_max} < r_min {r_min}")]
    ArgumentOrder { r_max: f64, r_min: f64 },

    #[error("visibility undefined: r_max is zero")]
    VisibilityUndefined,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
