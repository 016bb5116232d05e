use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically rank deficient (condition estimate {condition:.3e} exceeds cap {cap:.1e})")]
    RankDeficient { condition: f64, cap: f64 },

    #[error("matrix is singular at pivot {0}")]
    Singular(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid step size: dt = {dt}, t_end = {t_end}")]
    StepSizeInvalid { dt: f64, t_end: f64 },

    #[error("state diverged at t = {time:.3e} s (|x| = {norm:.3e})")]
    Unstable { time: f64, norm: f64 },

    #[error("eigenvalue iteration did not converge")]
    ConvergenceFailure,

    #[error("negative conductance {0:e} S")]
    NegativeConductance(f64),

    #[error("unknown sigma mode `{0}` (expected none, dg/6, dg/4 or dg/2)")]
    UnknownSigmaMode(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("conductance {value:e} S at ({row}, {col}) is outside the programmable range [{min:e}, {max:e}]")]
    ConductanceOutOfRange {
        row: usize,
        col: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("inconsistent sample dimensions: sample {index} has {found} coordinates, expected {expected}")]
    InconsistentDimensions {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("label {value} at index {index} is not binary")]
    NonBinaryLabel { index: usize, value: u8 },

    #[error("need more than {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("schema mismatch in {path}: {detail}")]
    SchemaMismatch { path: PathBuf, detail: String },

    #[error("parse error in {path} at row {row}, column {col}: {detail}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("bad IDX magic in {path}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("truncated IDX file {path}: expected {expected} bytes of payload, found {found}")]
    TruncatedFile {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("label {value} out of range at index {index}")]
    LabelOutOfRange { index: usize, value: u8 },

    #[error("invalid config at `{path}`: {detail}")]
    ConfigInvalid { path: String, detail: String },

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
