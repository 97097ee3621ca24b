use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("triangle {triangle} has non-positive signed area {area:e}")]
    NonPositiveArea { triangle: usize, area: f64 },
    #[error("hanging node or non-manifold edge at vertices ({a}, {b})")]
    HangingNode { a: usize, b: usize },
    #[error("boundary segment ({a}, {b}) is not a boundary edge of the mesh")]
    DanglingBoundaryTag { a: usize, b: usize },
    #[error("invalid mesh input: {0}")]
    InvalidMesh(String),
    #[error("marked triangle {index} out of range (mesh has {n_triangles})")]
    InvalidMark { index: usize, n_triangles: usize },
    #[error("diffusion coefficient is not symmetric positive definite at triangle {triangle}")]
    NotPositiveDefinite { triangle: usize },
    #[error("local condensation factor 1 + gamma S(T)/4 = {factor:e} vanishes on triangle {triangle}")]
    SingularLocalFactor { triangle: usize, factor: f64 },
    #[error("matrix is numerically singular at pivot step {step} (|pivot| = {pivot:e})")]
    SingularMatrix { step: usize, pivot: f64 },
    #[error("linear system is not square or inconsistent: {0}")]
    DimensionMismatch(String),
    #[error("solutions do not belong to the same mesh")]
    MeshMismatch,
    #[error("Dörfler parameter theta = {0} is outside (0, 1]")]
    BadTheta(f64),
    #[error("problem has no exact solution")]
    NoExactSolution,
    #[error("need at least two levels to compute rates")]
    InsufficientLevels,
    #[error("unknown benchmark '{0}'")]
    UnknownBenchmark(String),
    #[error("mixed solutions disagree: relative flux error {rel_p:e}, scalar error {rel_u:e}")]
    EquivalenceViolated { rel_p: f64, rel_u: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}
