use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("invalid geometry for feature {feature}: {reason}")]
    InvalidGeometry { feature: String, reason: String },

    #[error("non-increasing timestamps: {earlier} -> {later}")]
    NonIncreasingTime { earlier: i64, later: i64 },

    #[error("{path}: {fraction:.4} of rows rejected (limit {limit:.4})")]
    TooManyRejects {
        path: PathBuf,
        fraction: f64,
        limit: f64,
    },

    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("invalid study window: {0}")]
    InvalidWindow(String),

    #[error("unknown timezone {tz:?} for city {city}")]
    UnknownTimezone { city: String, tz: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),

    #[error("design matrix is rank deficient: column {column:?} is collinear with earlier columns")]
    RankDeficient { column: String },

    #[error("too few observations: {n_obs} rows for {n_params} parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },

    #[error("unknown variable {0:?}")]
    UnknownVariable(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("missing artifact {artifact}: run the `{stage}` stage first")]
    MissingArtifact { artifact: PathBuf, stage: &'static str },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by user-supplied inputs or configuration
    /// (exit code 1), false for internal failures (exit code 2).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
