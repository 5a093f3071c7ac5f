use thiserror::Error;

pub type Result<T> = std::result::Result<T, GapError>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GapError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),

    #[error("bound violated: observed {observed} > {bound} ({context})")]
    BoundViolated {
        bound: usize,
        observed: usize,
        context: String,
    },

    #[error("certificate failed for j = {j}: {reason}")]
    CertificateFailure { j: usize, reason: String },

    #[error("unsupported dimension {k} (maximum {max})")]
    UnsupportedDimension { k: usize, max: usize },

    #[error("step size too large: pre-projection residual {residual:e} at h = {h:e}; retry with a smaller h")]
    StepSize { residual: f64, h: f64 },

    #[error("surface gradient vanishes at {0:?}")]
    SingularSurface([f64; 3]),

    #[error("trajectory too short: need length {needed}, have {available}")]
    InsufficientLength { needed: f64, available: f64 },

    #[error("arithmetic overflow in exact computation: {0}")]
    Overflow(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GapError::Domain(msg.into()))
}
