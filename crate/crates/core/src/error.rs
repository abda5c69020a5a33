use thiserror::Error;

use crate::gaussian::Quadrature;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a Gaussian register needs at least one mode")]
    EmptyRegister,
    #[error("mode index {index} out of range for a {n_modes}-mode register")]
    ModeOutOfRange { index: usize, n_modes: usize },
    #[error("mode index {0} listed twice")]
    DuplicateMode(usize),
    #[error("map acts on {map_modes} modes but {given} mode indices were given")]
    DimensionMismatch { map_modes: usize, given: usize },
    #[error("conditioning variance {variance} of {quadrature:?} is not positive")]
    DegenerateConditioning { quadrature: Quadrature, variance: f64 },
    #[error("squeezing parameter must be nonnegative, got {0}")]
    NegativeSqueezing(f64),
    #[error("transmittance must lie in [0, 1], got {0}")]
    Transmittance(f64),
    #[error("detector efficiency must lie in (0, 1], got {0}")]
    Efficiency(f64),
    #[error("reflectivity must lie in [0, 1), got {0}")]
    Reflectivity(f64),
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("invalid cloner parameters: {0}")]
    InvalidParams(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("unknown input label {0}")]
    UnknownLabel(String),
    #[error("distribution into {outputs} outputs needs {needed} vacuum labels, got {given}")]
    InsufficientVacua {
        outputs: usize,
        needed: usize,
        given: usize,
    },
    #[error("output covariance is not quadrature-diagonal (Cov(X,P) = {0})")]
    NotQuadratureDiagonal(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
