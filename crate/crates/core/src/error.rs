use thiserror::Error;

/// Errors raised by the curvature algebra, the model catalog, the discrete
/// operators and the flow integrators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix is not symmetric: max |S_ij - S_ji| = {defect:e} exceeds {tolerance:e}")]
    Asymmetric { defect: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:e} below -{threshold:e}")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("point is {distance:e} away from the model")]
    OffModel { distance: f64 },

    #[error("extinct at t = {t} (extinction time {extinction_time})")]
    Extinct { t: f64, extinction_time: f64 },

    #[error("profile pinched (radius {radius:e} at node {node}) at t = {t}")]
    Pinch { t: f64, node: usize, radius: f64 },

    #[error("time step {dt:e} violates the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("degenerate edge of length {length:e} at vertex {vertex}")]
    DegenerateEdge { vertex: usize, length: f64 },

    #[error("not a self-shrinker: residual {residual:e} exceeds {tolerance:e}")]
    NotShrinker { residual: f64, tolerance: f64 },

    #[error("grid has {len} nodes, need at least {min}")]
    GridTooShort { len: usize, min: usize },

    #[error("fields are defined on different geometries")]
    GeometryMismatch,

    #[error("sample set is empty")]
    EmptySamples,

    #[error("numerical failure at t = {t}: {message}")]
    Numerical { t: f64, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
