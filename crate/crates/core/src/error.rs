use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {0:?} is not a grid point")]
    OffGrid(Vec<f64>),

    #[error("grid spaces do not match")]
    SpaceMismatch,

    #[error("undefined extended-real operation: -inf + inf")]
    UndefinedSum,

    #[error("value is not a number")]
    NotANumber,

    #[error("+inf is not allowed in a grid function (index {0})")]
    PosInfInFunction(usize),

    #[error("-inf is not allowed in a rate field (index {0})")]
    NegInfInRate(usize),

    #[error("negative rate value {value} at index {index}")]
    NegativeRate { index: usize, value: f64 },

    #[error("testing family is empty")]
    EmptyFamily,

    #[error("family is not point-indexed: {0}")]
    NotPointIndexed(String),

    #[error("model `{0}` does not support capacity evaluation")]
    CapacityUnsupported(String),

    #[error("working box too small for model `{model}`: must contain [{lo}, {hi}]")]
    BoxTooSmall { model: String, lo: f64, hi: f64 },

    #[error("unsupported dimension {0}: model is one-dimensional")]
    Dimension(usize),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
