use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("singular system: {0}")]
    Singular(&'static str),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("csv error in {path}: {msg}")]
    Csv { path: PathBuf, msg: String },
    #[error("bad cell at {path}, row {row}, column {col}: {msg}")]
    BadCell {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },
    #[error("image error: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
