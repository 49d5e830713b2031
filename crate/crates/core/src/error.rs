use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("value {value} for `{name}` is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("{features} features exceed the exact-enumeration limit of {limit}; use kernel_shap instead")]
    TooManyFeatures { features: usize, limit: usize },

    #[error("weighted least-squares system is rank deficient (rank {rank} of {size})")]
    RankDeficient { rank: usize, size: usize },

    #[error("SVM did not converge within {iterations} iterations (last KKT violation {violation:.3e})")]
    NotConverged { iterations: usize, violation: f64 },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("column `{column}`: {reason}")]
    Column { column: String, reason: String },

    #[error("unseen value `{value}` in column `{column}`")]
    UnseenValue { column: String, value: String },

    #[error("unknown code {code} in column `{column}`")]
    UnknownCode { column: String, code: u32 },

    #[error("malformed grouped value `{0}`: expected 4 segments separated by '/'")]
    MalformedGroup(String),

    #[error("{0}")]
    Model(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
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
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag, used by the CLI error JSON and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Empty(_) => "empty",
            Error::Dimension { .. } => "dimension",
            Error::TooManyFeatures { .. } => "too_many_features",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::NotConverged { .. } => "not_converged",
            Error::MissingColumn(_) => "missing_column",
            Error::Column { .. } => "column",
            Error::UnseenValue { .. } => "unseen_value",
            Error::UnknownCode { .. } => "unknown_code",
            Error::MalformedGroup(_) => "malformed_group",
            Error::Model(_) => "model",
            Error::Stage { .. } => "stage",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

/// Attach a pipeline stage name to an error.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
