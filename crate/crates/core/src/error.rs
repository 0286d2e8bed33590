use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-positive depth {0}")]
    NonPositiveDepth(f64),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("innovation covariance is not invertible")]
    SingularInnovation,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("degenerate hypothesis set")]
    DegenerateHypotheses,

    #[error("assignment problem is infeasible")]
    Infeasible,

    #[error("invalid depth range [{z_min}, {z_max}]")]
    InvalidDepthRange { z_min: f64, z_max: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("insufficient matches: need at least {needed}, found {found}")]
    InsufficientMatches { needed: usize, found: usize },

    #[error("empty ground truth")]
    EmptyGroundTruth,

    #[error("LP solver failed: {0}")]
    Lp(String),

    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn stage(stage: &'static str, message: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            message: message.into(),
        }
    }
}
