use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {element} references missing node {node}")]
    InvalidNodeIndex { element: usize, node: usize },

    #[error("element {element} is degenerate or clockwise (signed area {area:e})")]
    InvertedElement { element: usize, area: f64 },

    #[error("edge {edge} {nodes:?} is shared by {count} elements")]
    NonManifoldEdge { edge: usize, nodes: [usize; 2], count: usize },

    #[error("boundary edge {edge} {nodes:?} matches no boundary rule")]
    UntaggedBoundaryEdge { edge: usize, nodes: [usize; 2] },

    #[error("node {node} belongs to no element")]
    UnreferencedNode { node: usize },

    #[error("boundary group {group} has no load data")]
    MissingBoundaryData { group: usize },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("no quadrature rule of exactness {requested} (maximum {max})")]
    QuadratureUnavailable { requested: usize, max: usize },

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("singular system in {context}")]
    SingularSystem { context: String },

    #[error("compatibility violated at node {node}: residual {residual:e} (scale {scale:e})")]
    Compatibility { node: usize, residual: f64, scale: f64 },

    #[error("element {element} tractions are not self-equilibrated: residual {residual:e} (scale {scale:e})")]
    UnbalancedElement { element: usize, residual: f64, scale: f64 },

    #[error("negative squared reference error {0:e}; meshes are not nested")]
    NegativeReferenceEnergy(f64),

    #[error("{0}")]
    Config(String),
}
