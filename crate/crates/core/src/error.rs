use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell ({row}, {col}) is constant over time; cannot scale to unit variance")]
    ZeroVarianceCell { row: usize, col: usize },

    #[error("lag {lag} is out of range for a series of length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("eigen-solver did not converge")]
    ConvergenceFailure,

    #[error("degenerate spectrum: leading eigenvalue {0:e} is not above the tolerance")]
    DegenerateSpectrum(f64),

    #[error("columns are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("AR coefficient {0} is not stationary (|phi| must be < 1)")]
    UnstableAr(f64),

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("too few observations: need at least {required}, got {actual}")]
    TooFewObservations { required: usize, actual: usize },

    #[error("invalid validation schedule: {0}")]
    ScheduleInvalid(String),

    #[error("vectorized problem too large: p1*p2 = {0} exceeds 4096")]
    TooLarge(usize),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("incomplete panel: missing cell (t={t}, row={row}, col={col})")]
    IncompletePanel { t: usize, row: usize, col: usize },

    #[error("non-finite value at (t={t}, row={row}, col={col})")]
    NonFinite { t: usize, row: usize, col: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroVarianceCell { .. } => "ZeroVarianceCell",
            Error::LagTooLarge { .. } => "LagTooLarge",
            Error::InvalidSeries(_) => "InvalidSeries",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ConvergenceFailure => "ConvergenceFailure",
            Error::DegenerateSpectrum(_) => "DegenerateSpectrum",
            Error::NotOrthonormal(_) => "NotOrthonormal",
            Error::UnstableAr(_) => "UnstableAR",
            Error::NotSpd => "NotSPD",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::TooFewObservations { .. } => "TooFewObservations",
            Error::ScheduleInvalid(_) => "ScheduleInvalid",
            Error::TooLarge(_) => "TooLarge",
            Error::Schema(_) => "SchemaError",
            Error::IncompletePanel { .. } => "IncompletePanel",
            Error::NonFinite { .. } => "NonFinite",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }

    pub(crate) fn dims(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::DimensionMismatch { expected: expected.into(), actual: actual.into() }
    }
}
