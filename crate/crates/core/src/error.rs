use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("traces live over different alphabets")]
    AlphabetMismatch,
    #[error("{what} has {size} items, above the limit of {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("not a configuration: {0}")]
    NotConfiguration(String),
    #[error("transformation degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("value {value} out of range for a set of size {size}")]
    OutOfRange { value: usize, size: usize },
    #[error("transformation is not a loc-map for {0}")]
    NotLocalMap(String),
    #[error("independent actions `{0}` and `{1}` have non-commuting images")]
    NotTraceMorphism(String, String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("formula outside the supported fragment: {0}")]
    Fragment(String),
    #[error("communication graph is not acyclic")]
    Cyclic,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
