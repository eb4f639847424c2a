use thiserror::Error;

/// Every failure the library can report.
///
/// Data-validation variants carry the 1-based data row (header excluded) so
/// that diagnostics can point at the offending line of a CSV file.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("header must start with `time,status`, found `{found}`")]
    BadHeader { found: String },

    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount { row: usize, expected: usize, found: usize },

    #[error("row {row}: column `{column}` is not a number: `{value}`")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("row {row}: status must be 0 or 1, found `{value}`")]
    BadStatus { row: usize, value: String },

    #[error("row {row}: time must be finite and nonnegative, found {value}")]
    BadTime { row: usize, value: f64 },

    #[error("row {row}: covariate `{column}` is not finite")]
    NonFiniteCovariate { row: usize, column: String },

    #[error("row {row}: event at time {time} lies beyond the cure threshold {tau}")]
    EventBeyondThreshold { row: usize, time: f64, tau: f64 },

    #[error("sample contains no observed event")]
    NoEvents,

    #[error("sample is empty")]
    EmptySample,

    #[error("invalid cure threshold {0}")]
    InvalidThreshold(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown link specification `{0}` (expected cox, poly:<k>, sin or sinpoly:<k>)")]
    BadLinkSpec(String),

    #[error("link value is not finite at the supplied parameter")]
    NonFiniteLink,

    #[error("fit did not converge")]
    NotConverged,

    #[error("information singular")]
    SingularInformation,

    #[error("{quantity} = {value} is outside the domain of the {transform} transform")]
    TransformDomain { quantity: &'static str, value: f64, transform: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("{excluded} of {total} replications failed, above the 5% exclusion cap")]
    ExclusionCap { excluded: usize, total: usize },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::BadHeader { .. } => "bad_header",
            Error::ColumnCount { .. } => "column_count",
            Error::NonNumeric { .. } => "non_numeric",
            Error::BadStatus { .. } => "bad_status",
            Error::BadTime { .. } => "bad_time",
            Error::NonFiniteCovariate { .. } => "non_finite_covariate",
            Error::EventBeyondThreshold { .. } => "event_beyond_threshold",
            Error::NoEvents => "no_events",
            Error::EmptySample => "empty_sample",
            Error::InvalidThreshold(_) => "invalid_threshold",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BadLinkSpec(_) => "bad_link_spec",
            Error::NonFiniteLink => "non_finite_link",
            Error::NotConverged => "not_converged",
            Error::SingularInformation => "information_singular",
            Error::TransformDomain { .. } => "transform_domain",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Calibration(_) => "calibration",
            Error::ExclusionCap { .. } => "exclusion_cap",
            Error::Json(_) => "json",
        }
    }

    /// Data row the error refers to, when there is one.
    pub fn row(&self) -> Option<usize> {
        match self {
            Error::ColumnCount { row, .. }
            | Error::NonNumeric { row, .. }
            | Error::BadStatus { row, .. }
            | Error::BadTime { row, .. }
            | Error::NonFiniteCovariate { row, .. }
            | Error::EventBeyondThreshold { row, .. } => Some(*row),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
