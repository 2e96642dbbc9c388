use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("cleaning policy dropped every row")]
    AllRowsDropped,

    #[error("test fraction {0} is not strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("training labels contain a single class")]
    SingleClassInput,

    #[error("training data is empty")]
    EmptyData,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("at least two classes are required, found {0}")]
    TooFewClasses(usize),

    #[error("stage {stage} out of range for a cascade of {n} classes")]
    StageOutOfRange { stage: usize, n: usize },

    #[error("last-stage negative source has no rows")]
    PolicySourceEmpty,

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cross-validation fold {0} does not contain every class")]
    FoldDegenerate(usize),

    #[error("best value {value} of `{name}` is not among the grid candidates")]
    ValueNotInGrid { name: String, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("label {label} out of range for {n} classes")]
    LabelOutOfRange { label: usize, n: usize },

    #[error("model file: {0}")]
    Format(String),

    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: usize) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
