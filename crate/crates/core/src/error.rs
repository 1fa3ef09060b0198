use std::io;

use thiserror::Error;

/// Errors raised by the value-chain pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: negative value in field `{field}`: {value}")]
    NegativeValue {
        line: u64,
        field: String,
        value: f64,
    },

    #[error("missing column `{missing}`; expected schema: {expected}")]
    UnknownColumn { missing: String, expected: String },

    #[error("unknown product `{0}`")]
    UnknownProduct(String),

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("all-zero {0} flow matrix: specialization is undefined")]
    ZeroFlows(&'static str),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not square: {rows} rows x {cols} columns")]
    NotSquare { rows: usize, cols: usize },

    #[error("ids not found in label index: {}", .0.join(", "))]
    UnmatchedIds(Vec<String>),

    #[error("product universe mismatch: {}", .0.join(", "))]
    UniverseMismatch(Vec<String>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
