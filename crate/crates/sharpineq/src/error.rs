use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("function returned NaN at node {0}")]
    NanSample(usize),
    #[error("every node is masked")]
    AllMasked,
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("integration overflow: {0}")]
    Overflow(String),
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("transport failure: {0}")]
    Transport(String),
}

pub type Result<T> = std::result::Result<T, Error>;
