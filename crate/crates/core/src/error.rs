use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("event indicator at index {index} is {value}, expected 0 or 1")]
    InvalidIndicator { index: usize, value: u8 },

    #[error("censored observation at index {index} has y = {value}, expected the bound {bound}")]
    BoundViolation { index: usize, value: f64, bound: f64 },

    #[error("left-censored data requires a detection bound")]
    MissingBound,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("no events: every observation is censored")]
    NoEvents,

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("summaries need at least 2 replicates, got {0}")]
    InsufficientReplicates(usize),

    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
