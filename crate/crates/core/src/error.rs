use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("projection onto the sphere is undefined at the origin")]
    ZeroPoint,
    #[error("point is off the manifold: | |z| - 1 | = {deviation:e}")]
    OffManifold { deviation: f64 },
    #[error("invalid ambient: {0}")]
    InvalidAmbient(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("resolution {got} is below the minimum {min}")]
    ResolutionTooLow { got: usize, min: usize },
    #[error("degenerate metric at node {node}: det g = {det:e}")]
    DegenerateMetric { node: usize, det: f64 },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("variation is not tangent to the ambient manifold (max |Φ·w| = {max_dot:e})")]
    NotTangent { max_dot: f64 },
    #[error("variation has no ambient generator")]
    MissingGenerator,
    #[error("chart is not conformal: max defect {max_defect:e}")]
    NonConformalChart { max_defect: f64 },
    #[error("right-hand side is not in the range of ∂̄: mean component {mean:e}")]
    NotInRange { mean: f64 },
    #[error("variation is not in the Coulomb slice: |D*w| = {residual:e}")]
    NotInSlice { residual: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("target is outside the slice neighborhood: distance {distance:e} > radius {radius:e}")]
    OutsideNeighborhood { distance: f64, radius: f64 },
    #[error("Gram matrix is not positive definite")]
    GramNotSpd,
    #[error("invalid cutoff: {0}")]
    BadDelta(String),
    #[error("empty tail: no stage at or after index {0}")]
    EmptyTail(usize),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("operation requires a torus (Fourier) chart")]
    UnsupportedBasis,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
