use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial degree {0} (must be >= 1)")]
    InvalidDegree(usize),
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("negative Jacobian {jac:e} in element {elem}")]
    NegativeJacobian { elem: usize, jac: f64 },
    #[error("non-conforming connectivity: {0}")]
    NonConforming(String),
    #[error("unsupported boundary tag '{0}'")]
    UnsupportedBoundary(String),
    #[error("mesh file parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },
    #[error("non-finite value detected in field '{field}' at node {node}, t = {t}")]
    NonFinite { field: &'static str, node: usize, t: f64 },
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("integrator history not initialized")]
    HistoryNotInitialized,
    #[error("point ({0}, {1}, {2}) lies outside the mesh")]
    PointNotFound(f64, f64, f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
