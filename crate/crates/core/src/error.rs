use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vector of length {got} does not match vertex count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vertex {vertex} has non-positive measure {value}")]
    NonPositiveMeasure { vertex: usize, value: f64 },
    #[error("edge ({u}, {v}) has non-positive weight {weight}")]
    NonPositiveWeight { u: usize, v: usize, weight: f64 },
    #[error("vertex {vertex} out of range for graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("{vertices} vertices exceed the dense solver threshold {threshold}")]
    DenseThresholdExceeded { vertices: usize, threshold: usize },
    #[error("requested {requested} eigenpairs from a graph with {vertices} vertices")]
    TooManyEigenpairs { requested: usize, vertices: usize },
    #[error("eigensolver did not converge: {reason} (worst residual {worst_residual:e})")]
    EigenNonConvergence { reason: String, worst_residual: f64 },
    #[error("eigenvalues {index} and {neighbor} are near-degenerate (gap {gap:e})")]
    NearDegenerate { index: usize, neighbor: usize, gap: f64 },
    #[error("invalid spectral target: {0}")]
    InvalidTarget(String),
    #[error("prescription failed after {restarts} restarts (best mismatch {best_mismatch:e})")]
    PrescriptionNonConvergence { restarts: usize, best_mismatch: f64 },
    #[error("prescription converged with weight {weight:e} on edge {edge} pinned at the positivity floor")]
    BoundaryFailure { edge: usize, weight: f64 },
    #[error("targets ({lambda1}, {lambda2}) are infeasible on the three-vertex path: need lambda2 >= 2 lambda1")]
    InfeasibleP3 { lambda1: f64, lambda2: f64 },
    #[error("invalid vertex count {n}: {reason}")]
    InvalidVertexCount { n: usize, reason: &'static str },
    #[error("inconsistent surface model: {0}")]
    InconsistentSurface(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cluster of size {size} with {colors} colors needs size > 4 * colors")]
    ClusterTooSmall { size: usize, colors: usize },
    #[error("wiring resample budget {budget} exhausted: {deficiencies:?}")]
    ResampleBudgetExhausted { budget: usize, deficiencies: Vec<String> },
    #[error("port exposure failed: {0}")]
    PortExposure(String),
    #[error("graph with {vertices} vertices is too large for exhaustive Cheeger enumeration (max {max})")]
    CheegerTooLarge { vertices: usize, max: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("scale m = {m} too small: corridor length floor is zero for edge {edge}")]
    ScaleTooSmall { m: usize, edge: usize },
    #[error("missing eigenvectors")]
    MissingEigenvectors,
}
