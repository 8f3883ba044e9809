use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("radius {radius} lies outside the tabulated range [{min}, {max}]")]
    OutOfTable { radius: f64, min: f64, max: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error(
        "lambda = {lambda} is numerically exceptional: sigma_min(I+K) = {sigma_min:e} < threshold {threshold:e}"
    )]
    Exceptional {
        lambda: f64,
        sigma_min: f64,
        threshold: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("potential is not spherically symmetric")]
    NonRadial,

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("spectrum is incomplete: {found} eigenpairs for dimension {dim}")]
    IncompleteSpectrum { found: usize, dim: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
