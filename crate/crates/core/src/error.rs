use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("meshing failed: {0}")]
    MeshingFailed(String),

    #[error("inconsistent mesh: {0}")]
    InconsistentMesh(String),

    #[error("singular viscosity: {0}")]
    SingularViscosity(String),

    #[error("linear solve failed: {0}")]
    LinearSolveFailed(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("degenerate base state: {0}")]
    DegenerateBase(String),

    #[error("invalid viscosity law: {0}")]
    InvalidLaw(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("missing tensor for order {0}")]
    MissingTensor(u32),

    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
