use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("site {site} outside lattice of {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("basis dimension {dim} exceeds cap {cap}")]
    BasisTooLarge { dim: u128, cap: usize },
    #[error("dimension {dim} exceeds dense cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },
    #[error("invalid basis: {0}")]
    Basis(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("operands live on different bases")]
    BasisMismatch,
    #[error("Krylov propagation failed: {0}")]
    Krylov(String),
    #[error("eigensolver did not converge: {0}")]
    Eigen(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("bound precondition violated: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
