use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubmaxError {
    #[error("element {element} out of range for ground set of size {n}")]
    ElementOutOfRange { element: usize, n: usize },
    #[error("element {0} is outside the restricted ground set")]
    OutsideRestriction(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SubmaxError>;
