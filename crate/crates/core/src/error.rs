use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("batch norm needs at least 2 rows in train mode, got {0}")]
    DegenerateBatch(usize),

    #[error("invalid label {value} at index {index}: labels must be 0 or 1")]
    InvalidLabel { index: usize, value: f64 },

    #[error("invalid range [{lo}, {hi}]: lower bound must be below upper bound")]
    Range { lo: f64, hi: f64 },

    #[error("degenerate feature: {0}")]
    DegenerateFeature(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stale cache: {0}")]
    StaleCache(String),

    #[error("non-finite gradient in parameter group {group} at element {index}")]
    NonFiniteGradient { group: usize, index: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("csv error at row {row}, column {column}: {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("split error: {0}")]
    Split(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
