use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("hypothesis violated at t = {t}: {what}")]
    Hypothesis { t: f64, what: String },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("numerical rank ambiguous: singular value ratio {ratio:e} inside [1e-10, 1e-8]")]
    AmbiguousRank { ratio: f64 },
    #[error("ill-conditioned computation: {0}")]
    IllConditioned(String),
    #[error("critical index s = {0} requires the interpolation branch")]
    CriticalIndex(f64),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("singular system beyond kernel accounting at mode {mode}")]
    Singular { mode: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;
