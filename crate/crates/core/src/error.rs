use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed region document: {0}")]
    MalformedRegion(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "net validation failed after {rounds} refinement rounds: \
         max gap {max_gap:.6} (epsilon {epsilon}), min multiplicity {min_multiplicity} (need {k})"
    )]
    NetValidation {
        rounds: usize,
        max_gap: f64,
        epsilon: f64,
        min_multiplicity: usize,
        k: usize,
    },

    #[error("net precondition violated: {0}")]
    NetPrecondition(String),

    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("instance too large for enumeration: {count} candidate vectors exceed limit {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("index {index} out of range for configuration of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// A computed result contradicts a guarantee, e.g. lower bound above upper.
    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures that stem from the instance itself rather than from how the
    /// tool was invoked.
    pub fn is_instance_failure(&self) -> bool {
        matches!(
            self,
            Error::NetValidation { .. }
                | Error::NetPrecondition(_)
                | Error::Infeasible(_)
                | Error::CheckFailed(_)
        )
    }
}
