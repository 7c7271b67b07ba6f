use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a finite number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: label column '{column}' not found in header")]
    MissingLabelColumn { path: PathBuf, column: String },

    #[error("dataset '{0}' has no ground-truth labels")]
    MissingLabels(String),

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{family} divergence requires coordinates > {eps:e}, got {value} at index {index}")]
    Domain {
        family: &'static str,
        index: usize,
        value: f64,
        eps: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("label vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(
        "gravity guard violated at iteration {iteration}: point {point} has eta*G*K = {value} (must be < 2)"
    )]
    GuardViolation {
        iteration: usize,
        point: usize,
        value: f64,
    },

    #[error("non-finite objective after iteration {iteration} ({method})")]
    NonFiniteObjective {
        method: &'static str,
        iteration: usize,
    },

    #[error("all pairwise distances are zero")]
    DegenerateDistances,

    #[error("no feasible candidate among {0} grid points")]
    NoFeasibleCandidate(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
