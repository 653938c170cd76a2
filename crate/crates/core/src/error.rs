use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid target state: {0}")]
    InvalidState(String),

    #[error("invalid sensor network: {0}")]
    InvalidNetwork(String),

    #[error("count vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("target count mismatch: expected {expected}, found {found}")]
    TargetCountMismatch { expected: usize, found: usize },

    #[error(
        "the exact likelihood is only tractable for a single target, got {0} targets"
    )]
    ExactLikelihoodScope(usize),

    #[error("invalid sampler configuration: {0}")]
    Config(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed scenario file: {0}")]
    Json(#[from] serde_json::Error),
}
