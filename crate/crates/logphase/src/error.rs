use thiserror::Error;

/// Errors surfaced by the toolkit. Validation failures are *not* errors:
/// they come back as report entries with negative margins.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed field `{field}`: {message}")]
    MalformedField { field: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("critical exponent undefined: {0}")]
    CriticalExponentUndefined(String),

    #[error("hypothesis inconsistency: {0}")]
    HypothesisInconsistency(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("accuracy failure: {0}")]
    Accuracy(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mesh/domain mismatch: {0}")]
    MeshMismatch(String),

    #[error("subcritical fields missing: {0}")]
    MissingSubcritical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
