use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bit index {index} out of range for a {len}-bit vector")]
    OutOfRange { index: u64, len: u64 },

    #[error("line {line}: parse error: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: validation error: {reason}")]
    Validation { line: usize, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("group probabilities are undefined without non-keys")]
    UndefinedEstimate,

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),

    #[error("no feasible candidate: {0}")]
    Infeasible(String),

    #[error("false positive rate is undefined over an empty query set")]
    UndefinedMeasurement,

    #[error("malformed filter encoding: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
