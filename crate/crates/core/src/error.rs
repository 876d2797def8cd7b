use thiserror::Error;

/// Errors raised by the algebra and geometry layers.
///
/// Identity-check failures are never errors; they are recorded in a
/// [`CheckReport`](crate::report::CheckReport).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { pos: usize, name: String },

    #[error("operands live on different charts")]
    ChartMismatch,

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("wrong degree: expected {expected}, found {found}")]
    WrongDegree { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("supplied seed is not an exact inverse of the fiber-degree-0 block")]
    BadInverseSeed,

    #[error("matrix is singular at fiber degree 0: {0}")]
    Singular(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
