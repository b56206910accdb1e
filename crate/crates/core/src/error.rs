use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path} contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}, line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("{path}, line {line}, column {column}: `{value}` is not a number")]
    NonNumeric {
        path: PathBuf,
        line: u64,
        column: usize,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("invalid dataset shape: {0}")]
    Shape(String),

    #[error("sample size mismatch: X has {x} rows, Y has {y} rows")]
    SampleSizeMismatch { x: usize, y: usize },

    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("center and probe index must differ (both {0})")]
    SameIndex(usize),

    #[error("index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("number of permutation replicates must be at least 1")]
    ZeroReplicates,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown scenario `{name}`; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },

    #[error("nothing to emit: the table has no rows")]
    EmptyTable,

    #[error("cannot serialize output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
