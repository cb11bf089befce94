//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// I/O failure while reading or writing a data file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV-level parse failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A cell could not be parsed as a number.
    #[error("unparseable cell at row {row}, column '{column}': '{value}'")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    /// A header appeared more than once.
    #[error("duplicate header '{0}'")]
    DuplicateHeader(String),

    /// A column referenced by a role mapping does not exist in the file.
    #[error("missing column '{0}'")]
    MissingColumn(String),

    /// The design matrix is rank deficient.
    #[error("singular design: column {column_index} ('{column_name}') is linearly dependent on the preceding columns")]
    SingularDesign {
        column_index: usize,
        column_name: String,
    },

    /// Logistic regression detected complete or quasi-complete separation.
    #[error("separation detected in logistic regression after {iterations} iterations (max |coefficient| = {max_abs_coef:.3e})")]
    Separation {
        iterations: usize,
        max_abs_coef: f64,
    },

    /// Iterative fit failed to converge.
    #[error("no convergence after {iterations} iterations (last max score component = {last_score:.3e})")]
    NoConvergence { iterations: usize, last_score: f64 },

    /// An input violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A statistic or estimator is undefined on the given data (degenerate variance,
    /// empty stratum arm, perfect-fit row, and so on).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Exact enumeration was requested but the support exceeds the cap.
    #[error("enumeration support {support} exceeds cap {cap}; use Monte Carlo instead")]
    EnumerationTooLarge { support: u128, cap: u128 },

    /// Too many bootstrap replicates were dropped.
    #[error("{dropped} of {total} bootstrap replicates were undefined (more than 10%)")]
    TooManyDropped { dropped: usize, total: usize },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Convenience constructor for precondition violations.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Convenience constructor for degenerate-data failures.
    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
