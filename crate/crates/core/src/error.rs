use thiserror::Error;

#[derive(Debug, Error)]
pub enum IvlError {
    #[error("state outside the state space: {0}")]
    OutOfSpace(String),
    #[error("ambiguous comparison, more precision needed: {0}")]
    Ambiguous(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no spanning set: grid point {point} is kept by no word")]
    NoSpanningSet { point: String },
    #[error("kernel table is incomplete, exact cover refused")]
    IncompleteTable,
    #[error("corrupt or mismatched binary file: {0}")]
    Codec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, IvlError>;
