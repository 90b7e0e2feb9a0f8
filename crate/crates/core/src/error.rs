use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("missing data: {0}")]
    EmptyInput(&'static str),

    #[error("ground state did not converge after {iterations} iterations (last energy {energy})")]
    GroundStateNotConverged { iterations: usize, energy: f64 },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("samples are not uniformly spaced (first deviation at index {0})")]
    NonUniformSampling(usize),

    #[error("series are not aligned: {0}")]
    Misaligned(String),

    #[error("region lies outside the grid: {0}")]
    OutOfGrid(String),

    #[error("purity is undefined: every masked state vanishes")]
    PurityUndefined,

    #[error("shooting jacobian is singular (|det(M - I)| = {0:e}); fixed point is not isolated")]
    SingularJacobian(f64),

    #[error("newton iteration stalled after {iterations} iterations (residual {residual:e})")]
    NewtonNotConverged { iterations: usize, residual: f64 },

    #[error("symmetry partner failed verification (residual {0:e})")]
    SymmetryBroken(f64),

    #[error("configuration {index} failed: {source}")]
    Configuration {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config value for `{key}` is out of range: {message}")]
    ConfigRange { key: String, message: String },

    #[error("malformed data file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
