use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index}: area {area:e} below threshold {threshold:e}")]
    DegenerateElement {
        index: usize,
        area: f64,
        threshold: f64,
    },

    #[error("mesh exceeds the size cap of {cap} triangles ({requested} requested)")]
    MeshTooLarge { requested: usize, cap: usize },

    #[error("anisotropy field vanishes at ({x}, {y}): |B| = {norm:e}")]
    FieldVanishes { x: f64, y: f64, norm: f64 },

    #[error("coefficient check failed: {0}")]
    Coefficient(String),

    #[error("no Dirichlet boundary: the problem needs a non-empty Dirichlet part")]
    MissingDirichlet,

    #[error("singular factorization: pivot {value:e} at row {index} (smallest |pivot| so far {smallest:e})")]
    SingularPivot {
        index: usize,
        value: f64,
        smallest: f64,
    },

    #[error("point ({x}, {y}) lies outside the mesh (distance {distance:e})")]
    PointOutside { x: f64, y: f64, distance: f64 },

    #[error("metric is not symmetric positive definite at vertex {vertex}")]
    NonSpdMetric { vertex: usize },

    #[error("remeshing failed near ({x}, {y}): {reason}")]
    Remesh { x: f64, y: f64, reason: String },

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
