use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("singular projection: A A^T is not invertible (condition ratio {ratio:e})")]
    SingularProjection { ratio: f64 },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("honest optimum is not unique (normal matrix is singular)")]
    NonUniqueOptimum,

    #[error("redundancy check would enumerate {subsets} subsets (limit {limit})")]
    Scale { subsets: u128, limit: u128 },
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
