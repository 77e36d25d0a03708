//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Everything that can go wrong while validating inputs, ingesting history,
/// fitting distributions, solving, or training predictors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("price at hour {hour} must be positive, got {milli} milli-units")]
    NonPositivePrice { hour: usize, milli: i64 },

    #[error("horizon {horizon} out of range, expected 1..=24")]
    HorizonOutOfRange { horizon: usize },

    #[error("invalid pump configuration: {0}")]
    InvalidPumpConfig(String),

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("demand at hour {hour} must be finite and non-negative, got {value}")]
    InvalidDemand { hour: usize, value: f64 },

    #[error("schedule code {code} out of range for horizon {horizon}")]
    CodeOutOfRange { code: u64, horizon: usize },

    #[error("exhaustive search limited to horizon <= {max}, got {horizon}")]
    HorizonTooLargeForExhaustive { horizon: usize, max: usize },

    #[error("history holds {complete_days} complete day(s), need at least 2")]
    HistoryTooShort { complete_days: usize },

    #[error("duplicate reading for {date} hour {hour}")]
    DuplicateReading { date: chrono::NaiveDate, hour: u32 },

    #[error("history row {line}: {reason}")]
    InvalidHistoryRow { line: u64, reason: String },

    #[error("invalid demand statistics: {0}")]
    InvalidStats(String),

    #[error("mean at hour {hour} must be positive to fit a lognormal, got {value}")]
    NonPositiveMean { hour: usize, value: f64 },

    #[error(
        "covariance entry ({i},{j}) implies log-moment of 1 + cov/(mean_i*mean_j) = {value}, \
         which is not positive"
    )]
    LogMomentUndefined { i: usize, j: usize, value: f64 },

    #[error("covariance could not be factorised even after diagonal jitter up to {max_jitter}")]
    CovarianceNotFactorable { max_jitter: f64 },

    #[error("{what} must not be empty")]
    EmptyInput { what: &'static str },

    #[error("schedules mix horizons: expected {expected}, got {got}")]
    MixedHorizons { expected: usize, got: usize },

    #[error("dataset has {n} cases, need at least {min} for a {what} split")]
    DatasetTooSmall {
        what: &'static str,
        n: usize,
        min: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
