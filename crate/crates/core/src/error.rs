use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("rank-one decomposition failed: {0}")]
    DecompositionFailed(String),
}

pub type Result<T> = core::result::Result<T, Error>;
