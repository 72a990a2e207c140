use thiserror::Error;

#[derive(Debug, Error)]
pub enum DclError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid coefficient field: {0}")]
    InvalidCoefficient(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("cutoff schedule not monotone at step {0}")]
    NonMonotoneSchedule(usize),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("comparison premise violated on element {element}: c1 = {c1} > a * c2 = {bound}")]
    PremiseViolated { element: usize, c1: f64, bound: f64 },
    #[error("problem too large for dense evaluation: n = {0} (use resolvent powers)")]
    TooLargeForDense(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DclError>;
