//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented domain constraint.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A required CSV column is missing or renamed.
    #[error("schema error: missing column `{column}`")]
    MissingColumn { column: String },

    /// A CSV cell failed to parse as a number. Rows are 1-based data rows
    /// (the header is row 0).
    #[error("parse error at data row {row}, column `{column}`: {value:?} is not numeric")]
    CellParse {
        row: usize,
        column: String,
        value: String,
    },

    /// A record violated its invariants while loading.
    #[error("validation error at data row {row}: {message}")]
    RowValidation { row: usize, message: String },

    /// The file contained a header but no data rows.
    #[error("empty dataset: file contains a header but no data rows")]
    EmptyDataset,

    /// A split produced an empty part.
    #[error("split error: {0}")]
    Split(String),

    /// Matrix or vector dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// The linear solver could not produce a solution.
    #[error("solver error: {0}")]
    Solver(String),

    /// A design matrix is numerically rank deficient.
    #[error("rank error: numerical rank {rank} is below the {cols} columns of the design matrix")]
    RankDeficient { rank: usize, cols: usize },

    /// An input is degenerate for the requested statistic.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An actual value of zero makes the relative error undefined.
    #[error("division by zero: actual value at index {index} is zero")]
    DivisionByZero { index: usize },

    /// The actual values have no variance, so R^2 is undefined.
    #[error("zero variance: actual values are constant, R^2 is undefined")]
    ZeroVariance,

    /// A configuration value is out of its documented domain.
    #[error("config error: {0}")]
    Config(String),

    /// Every cell of a node sweep failed.
    #[error("sweep error: {0}")]
    Sweep(String),

    /// A model file is malformed or truncated.
    #[error("model file error: {0}")]
    ModelFile(String),

    /// A model file was written by an unsupported schema version.
    #[error("model version error: file has schema_version {found}, expected {expected}")]
    ModelVersion { found: u32, expected: u32 },

    /// The model file checksum does not match its numeric payload.
    #[error("model checksum mismatch: file is corrupt or was edited")]
    ChecksumMismatch,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
