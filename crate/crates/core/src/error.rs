use thiserror::Error;

/// Errors raised by the geometric and metric operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient support: {found} distinct points, need at least {required}")]
    InsufficientSupport { found: usize, required: usize },
    #[error("degenerate fit: covariance is isotropic")]
    DegenerateFit,
    #[error("degenerate segment: all support points project to one location")]
    DegenerateSegment,
    #[error("invalid subdivision: d1={d1} d2={d2} for segment of length {length}")]
    InvalidSubdivision { d1: f64, d2: f64, length: f64 },
    #[error("degenerate axis: {0}")]
    DegenerateAxis(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
