use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not agree.
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Index outside a lookup table.
    Index { id: usize, len: usize },
    /// Invalid configuration or hyperparameter.
    Config(String),
    /// Entity or token has no row in an embedding table.
    MissingEmbedding(String),
    UnknownEntity(String),
    UnknownType(String),
    /// An operation that needs at least one element got none.
    Empty(&'static str),
    /// Two score matrices do not share rows or columns.
    Alignment(String),
    /// A record that violates a documented invariant.
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, left, right } => write!(
                f,
                "shape mismatch in {op}: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::Index { id, len } => write!(f, "index {id} out of range for table of {len} rows"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::MissingEmbedding(key) => write!(f, "no embedding for `{key}`"),
            Error::UnknownEntity(id) => write!(f, "unknown entity `{id}`"),
            Error::UnknownType(id) => write!(f, "unknown type `{id}`"),
            Error::Empty(what) => write!(f, "empty input: {what}"),
            Error::Alignment(msg) => write!(f, "misaligned score matrices: {msg}"),
            Error::Invalid(msg) => write!(f, "invalid record: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
