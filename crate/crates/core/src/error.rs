use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("non-finite value at row {row}, column {col}")]
    Data { row: usize, col: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("response vector is degenerate (all entries equal)")]
    DegenerateResponse,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("design with {predictors} predictors is overdetermined for n = {n}")]
    Overdetermined { predictors: usize, n: usize },

    #[error("residual degrees of freedom {dof} < 1 (n = {n}, k = {k})")]
    Dof { n: usize, k: usize, dof: i64 },

    #[error("column index {index} out of range for p = {p}")]
    Index { index: usize, p: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
