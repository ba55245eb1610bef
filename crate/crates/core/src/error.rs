use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command-line driver to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data, missing files, invalid arguments.
    Input,
    /// A structured file (report, grid, model) failed to parse.
    Format,
    /// A numerical routine failed to converge.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing header row")]
    MissingHeader,
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a finite number")]
    BadCell {
        line: usize,
        column: String,
        value: String,
    },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("column `{0}` has zero variance")]
    ConstantColumn(String),
    #[error("class `{class}` has {count} member(s), at least {required} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge after {sweeps} sweeps (max off-diagonal {off_diagonal:e})")]
    EigenNoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("{what}: parse error at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },
    #[error("model serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. } | Error::Serialization(_) => ErrorKind::Format,
            Error::EigenNoConvergence { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
