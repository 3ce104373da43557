use thiserror::Error;

/// Errors produced by the tensor-completion toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition (bad shape, bad mode,
    /// out-of-range parameter).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A file or stream does not conform to the expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// An iterative routine diverged or failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The inputs put an algorithm in a state it cannot make progress from
    /// (all-zero factors, vanished spectrum).
    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
