use chrono::NaiveDate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("no billing records supplied")]
    NoRecords,

    #[error("series is empty")]
    EmptySeries,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("duplicate holiday date {0}")]
    DuplicateHoliday(NaiveDate),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {required} observations, got {actual}")]
    TooFewObservations { required: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(
        "optimizer did not converge after {iterations} iterations \
         (objective {objective:.6e}, gradient norm {gradient_norm:.3e})"
    )]
    NotConverged {
        iterations: usize,
        objective: f64,
        gradient_norm: f64,
        parameters: Vec<f64>,
    },

    #[error("linear system is singular: {0}")]
    Singular(&'static str),

    #[error("length mismatch: {0} actual values vs {1} predictions")]
    LengthMismatch(usize, usize),

    #[error("actual value is zero at position {0}; MAPE undefined")]
    ZeroActual(usize),

    #[error("fold {fold} failed")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown dimension {0:?}")]
    UnknownDimension(String),

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("surrogate cannot be fit: {0}")]
    Surrogate(String),

    #[error("every search iteration failed")]
    AllTrialsFailed,

    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
