use thiserror::Error;

#[derive(Debug, Error)]
pub enum SgError {
    #[error("basis size overflows for dimension {dim} and order {order}")]
    BasisTooLarge { dim: usize, order: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to bracket KL root on {parity} branch {branch}")]
    RootBracket { parity: &'static str, branch: usize },

    #[error("requested {requested} KL terms but candidate pool holds only {pool}")]
    KlPoolExhausted { requested: usize, pool: usize },

    #[error("singular matrix: zero pivot in column {column}")]
    Singular { column: usize },

    #[error("dense oracle limited to {limit} unknowns, operator has {size}")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SgError>;
