use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("mesh quality failure: achieved h/rho = {achieved:.3} exceeds {limit:.3}")]
    MeshQuality { achieved: f64, limit: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid weight {value} at boundary node {node}")]
    InvalidWeight { node: usize, value: f64 },
    #[error("infeasible insulation parameters: {0}")]
    InfeasibleParams(String),
    #[error("invalid density: total thickness {value} at boundary node {node}")]
    InvalidDensity { node: usize, value: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("shape gradient probe failed at vertex {vertex}: {reason}")]
    GradientProbe { vertex: usize, reason: String },
}
