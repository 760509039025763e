use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("near-singular parameters: {0}")]
    NearSingular(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error("iteration did not converge: {0}")]
    Convergence(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("model violation: {0}")]
    Model(String),
    #[error("approximation breakdown: {0}")]
    Breakdown(String),
    #[error("config error: {0}")]
    Config(String),
}
