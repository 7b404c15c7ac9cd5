use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported factor graph (K={k}, J={j}, dv={dv}): {reason}")]
    UnsupportedGraph {
        k: usize,
        j: usize,
        dv: usize,
        reason: String,
    },

    #[error("invalid factor graph: {0}")]
    InvalidGraph(String),

    #[error("unsupported codebook size M={0} (supported: 2, 4)")]
    UnsupportedCodebookSize(usize),

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("expected {expected} bits, got {actual}")]
    BitCount { expected: usize, actual: usize },

    #[error("codeword is not a member of user {user}'s codebook")]
    NotACodeword { user: usize },

    #[error("delay {delay} outside [0, {max}]")]
    DelayOutOfRange { delay: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("zero operator: largest singular value is 0")]
    ZeroOperator,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration of {count} combinations exceeds the guard of {limit}")]
    TooManyCombinations { count: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
