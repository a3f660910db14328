use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DncError {
    #[error("empty network")]
    EmptyNetwork,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("divergent tail scaling")]
    DivergentTail,
    #[error("target exceeds bound at full coverage (target {target}, bound {bound})")]
    Unachievable { target: f64, bound: f64 },
    #[error("no center region: side {side} must exceed twice the threshold {d0}")]
    NoCenterRegion { side: f64, d0: f64 },
    #[error("infeasible ratio: {0}")]
    InfeasibleRatio(String),
    #[error("indefinite system: pivot {pivot} at index {index}")]
    Indefinite { index: usize, pivot: f64 },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("mode {mode} inconsistent with {layers} layer(s)")]
    ModeMismatch { mode: String, layers: usize },
    #[error("non-finite channel entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for DncError {
    fn from(e: std::io::Error) -> Self {
        DncError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for DncError {
    fn from(e: serde_json::Error) -> Self {
        DncError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DncError>;
