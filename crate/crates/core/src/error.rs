use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("label column {0} not found in header")]
    MissingColumn(String),

    #[error("label column must hold exactly 2 distinct values, found {0}")]
    LabelCount(usize),

    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("class {0} is empty")]
    EmptyClass(u8),

    #[error("class {class} with {size} rows is too small to split with train fraction {train_frac}")]
    ClassTooSmall {
        class: u8,
        size: usize,
        train_frac: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("within-group covariance is singular even after ridge regularization")]
    Singular,

    #[error("replicate {replicate}, strategy {strategy}: {source}")]
    Replicate {
        replicate: usize,
        strategy: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
