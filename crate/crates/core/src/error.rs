use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("synthesis error: {0}")]
    Synthesis(String),
    #[error("quadrature did not converge: residual estimate {residual:.3e} exceeds tolerance {tol:.3e}")]
    Quadrature { residual: f64, tol: f64 },
    #[error("integration accuracy error: {0}")]
    Integration(String),
    #[error("corrupted propagator state: |alpha| = {0} < 1")]
    CorruptedState(f64),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("zero Hermite rank up to k_max = {0}")]
    ZeroRank(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
