use thiserror::Error;

/// Errors produced by the estimation, distribution and inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("value {value} is below the support offset {offset}")]
    BelowOffset { value: u64, offset: u64 },

    #[error("threshold never exceeded: no observation is greater than {threshold}")]
    ThresholdNeverExceeded { threshold: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("hazard vector covers values 0..={len_max} but value {needed} was requested")]
    HazardOutOfRange { needed: usize, len_max: usize },

    #[error(
        "j + k = {sum} exceeds the largest record {max}; reduce k to at most {max_k} for this j"
    )]
    OutsideExactRegime { sum: u64, max: u64, max_k: i64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simulation exceeded the iteration cap of {cap} draws")]
    IterationCap { cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
