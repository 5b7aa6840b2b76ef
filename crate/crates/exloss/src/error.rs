//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by panel construction, loss evaluation, and the test
/// machinery.
///
/// Domain and numeric problems are hard failures rather than silent NaNs:
/// a NaN that reaches a sup statistic would poison the whole test.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Inputs are outside the domain of a loss family.
    #[error("domain error for {family} loss: {message}")]
    Domain {
        family: &'static str,
        message: String,
    },

    /// A required CSV column is missing.
    #[error("schema error: missing column `{0}`")]
    Schema(String),

    /// A CSV cell failed to parse; `row` counts data rows from 1.
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },

    /// An operation received no data.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A mixture integration range does not cover the forecast/realization
    /// interval.
    #[error("range error: {0}")]
    Range(String),

    /// A mixing density went negative on the integration range.
    #[error("mixture spec error: {0}")]
    Density(String),

    /// A variance estimate degenerated to zero or below.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// A regression design matrix is rank deficient.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// A derivative-free optimizer could not make progress.
    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    /// A recursion produced a non-finite value.
    #[error("overflow: {0}")]
    Overflow(String),

    /// A report contains non-finite values and cannot be serialized.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad configuration rather than bad data.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidArgument(_))
    }
}
