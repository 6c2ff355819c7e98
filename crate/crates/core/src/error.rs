use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("algebra mismatch: operands live over different generator sets")]
    AlgebraMismatch,
    #[error("parity error: {0}")]
    Parity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("group invariant violated: {0}")]
    Invariant(String),
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("inversion did not converge: residual {residual:.3e} after {iterations} iterations")]
    InversionFailure { residual: f64, iterations: usize },
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
