//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MetalensError>;

#[derive(Debug, Error)]
pub enum MetalensError {
    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    ConfidenceLevel(f64),

    #[error("study `{id}`: {reason}")]
    InvalidEstimate { id: String, reason: String },

    #[error("{0}: input must not be empty")]
    EmptyInput(&'static str),

    #[error("standard error must be positive and finite, got {0}")]
    BadStandardError(f64),

    #[error("p-value must lie in (0, 1], got {0}")]
    BadPValue(f64),

    #[error("value must lie in (0, 1], got {0}")]
    BadUnitValue(f64),

    #[error("ranks must cover 1..={expected} exactly, but rank {rank} is repeated or out of range")]
    BadRanks { expected: usize, rank: usize },

    #[error("plot points must be non-decreasing in p along ranks (rank {rank} breaks the order)")]
    UnsortedPlot { rank: usize },

    #[error("{what} needs at least {needed} studies, got {got}")]
    TooFewStudies {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("chi-square survival series requires a positive even df, got {0}")]
    BadDegreesOfFreedom(usize),

    #[error("chi-square statistic must be nonnegative and finite, got {0}")]
    BadChiSquare(f64),

    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    BadAlpha(f64),

    #[error("{0}")]
    InvalidParameter(String),

    #[error("row {row}: {message}")]
    CsvRow { row: usize, message: String },

    #[error("header must be `{expected}`, got `{got}`")]
    CsvHeader {
        expected: &'static str,
        got: String,
    },

    #[error("line {line}: unknown scenario key `{key}`")]
    UnknownScenarioKey { line: usize, key: String },

    #[error("line {line}: {message}")]
    ScenarioLine { line: usize, message: String },

    #[error("scenario is missing required key `{0}`")]
    MissingScenarioKey(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
