use thiserror::Error;

/// Errors raised by the lab. Variants map one-to-one onto the failure modes of
/// the individual modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point is outside the tubular neighbourhood of the boundary (|b| = {distance}, tube = {tube})")]
    OutsideTube { distance: f64, tube: f64 },
    #[error("closest point on the boundary is not unique near ({x}, {y})")]
    AmbiguousProjection { x: f64, y: f64 },
    #[error("Legendre transform did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("predictor left the projection tube at s = {s} (b = {distance})")]
    LeftTube { s: f64, distance: f64 },
    #[error("point ({x}, {y}) is not in the closed domain")]
    Infeasible { x: f64, y: f64 },
    #[error("more than {max} regime switches")]
    RegimeChatter { max: usize },
    #[error("normal-momentum solve failed at s = {s}")]
    NewtonFailure { s: f64 },
    #[error("parameter out of range: {0}")]
    DomainError(String),
    #[error("insufficient data for exponent fit: {0}")]
    InsufficientData(String),
    #[error("field has no zero crossing")]
    EmptyContour,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
