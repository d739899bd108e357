use thiserror::Error;

/// Errors raised by the laboratory operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("top-degree form: cannot differentiate a degree {0} form on a {0}-dimensional grid")]
    TopDegree(usize),
    #[error("degree overflow: {0} + {1} exceeds dimension {2}")]
    DegreeOverflow(usize, usize, usize),
    #[error("degree-0 input to interior product")]
    ZeroDegree,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("degenerate field at sample {index}: norm {norm:.3e}")]
    Degenerate { index: usize, norm: f64 },
    #[error("not strictly increasing at sample {0}")]
    NotIncreasing(usize),
    #[error("incompatible collar data: {0}")]
    IncompatibleCollar(String),
    #[error("not an embedding: {0}")]
    NotEmbedding(String),
    #[error("isotopy construction failed: {0}")]
    IsotopyFailed(String),
    #[error("smoothing budget exhausted: {0}")]
    SmoothingFailed(String),
    #[error("not foliated: {0}")]
    NotFoliated(String),
    #[error("orientation mismatch: {0}")]
    OrientationMismatch(String),
    #[error("stage {stage} failed: {detail}")]
    Stage { stage: String, detail: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("degenerate closed orbit data: {0}")]
    DegenerateOrbit(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("positivity failure at sample {index}: value {value:.6e}")]
    Positivity { index: usize, value: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
