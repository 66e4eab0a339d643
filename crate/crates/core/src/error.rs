use alloc::string::String;

use crate::scenario::Scenario;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("number of settings must be a positive even integer, got {n}")]
    InvalidSettings { n: i64 },

    #[error("scenario mismatch: {left} vs {right}")]
    ScenarioMismatch { left: Scenario, right: Scenario },

    #[error("scenario with n={n} settings exceeds the enumeration limit of {limit}")]
    CapacityExceeded { n: u16, limit: u16 },

    #[error("setting index {index} out of range 1..={n}")]
    SettingOutOfRange { index: u16, n: u16 },

    #[error("outcome {0} is not in {{0, 1}}")]
    InvalidOutcome(u8),

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("non-finite coefficient {0}")]
    NonFiniteCoefficient(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("NPA level {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedLevel(u8),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}
