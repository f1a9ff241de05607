use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("non-numeric feature at row {row}, column `{column}`: {value:?}")]
    NonNumericFeature {
        row: usize,
        column: String,
        value: String,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("empty candidate set")]
    EmptyCandidateSet,
    #[error("candidate probability mass {0:e} below floor")]
    CandidateMassBelowFloor(f64),
    #[error("degenerate bandwidth: all rows identical")]
    DegenerateBandwidth,
    #[error("mixture-proportion solver did not converge (last residual {residual:e})")]
    SolverNotConverged { residual: f64 },
    #[error("class {0} has no rows but a positive sampling weight")]
    EmptyClass(usize),
    #[error("metric undefined: {0}")]
    MetricUndefined(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
