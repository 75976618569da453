use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("total weight must be positive")]
    ZeroWeight,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("series `{series}` has a duplicate timestamp at hour {hour}")]
    DuplicateTimestamp { series: String, hour: i64 },
    #[error("series `{series}` is not sorted by time at hour {hour}")]
    Unsorted { series: String, hour: i64 },
    #[error("series `{series}` has a negative value {value} at hour {hour}")]
    NegativeValue { series: String, hour: i64, value: f64 },
    #[error("unknown series `{0}`")]
    UnknownSeries(String),
    #[error("calendar table is missing {} date(s), first {first}", .missing.len())]
    CalendarCoverage { first: String, missing: Vec<String> },
    #[error("only {found} complete samples, at least {required} required")]
    TooFewSamples { found: usize, required: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("feature columns do not match the fitted model: {0}")]
    ColumnMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("cross-validation plan: {0}")]
    CrossValidation(String),
    #[error("rank test: {0}")]
    RankTest(String),
}

pub type Result<T> = core::result::Result<T, Error>;
