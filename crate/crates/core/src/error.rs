use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("metric must be strictly positive (found {value} at x = {at})")]
    NonPositiveMetric { value: f64, at: f64 },

    #[error("rectangles only support a constant metric")]
    UnsupportedMetric,

    #[error("damping must be nonnegative (found {0})")]
    NegativeDamping(f64),

    #[error("invalid damping specification: {0}")]
    DampingSpec(String),

    #[error("trivial damping: a vanishes identically")]
    TrivialDamping,

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("spectrum on the imaginary axis at tau = {taus:?}")]
    SpectrumOnAxis { taus: Vec<f64> },

    #[error("eigensolver failed: {reason} (residual {residual:e})")]
    Eigensolver { reason: String, residual: f64 },

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("scan grid too coarse: spacing {spacing} exceeds {required} (half the smallest spectral gap)")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Domain(_) | Error::DampingSpec(_) => 2,
            Error::NonPositiveMetric { .. } | Error::UnsupportedMetric | Error::NegativeDamping(_) => 2,
            Error::GridTooCoarse { .. } | Error::Mismatch(_) | Error::EmptyWindow(_) => 2,
            Error::TrivialDamping | Error::HypothesisFailed(_) => 3,
            Error::SpectrumOnAxis { .. } => 4,
            Error::Eigensolver { .. } => 5,
            Error::Io(_) | Error::Csv(_) => 6,
        }
    }
}
