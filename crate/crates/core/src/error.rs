use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is below the domain floor {floor}")]
    Domain { what: &'static str, value: f64, floor: f64 },

    #[error("t = {t} lies outside the Formula 2 window [{lo}, {hi}]")]
    Window { t: f64, lo: f64, hi: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { what: &'static str, iterations: usize, residual: f64 },

    #[error("zeta oracle error estimate {estimate:e} exceeds target {target:e}; raise oracle_terms")]
    AccuracyNotReached { estimate: f64, target: f64 },

    #[error("no sign change of Z' in ({lo}, {hi}) after {samples} samples (max |Z'| = {max_abs:.3e})")]
    RootNotFound { lo: f64, hi: f64, samples: usize, max_abs: f64 },

    #[error("abscissa {t} is outside the cached range [{lo}, {hi}]")]
    CacheRange { t: f64, lo: f64, hi: f64 },

    #[error("quadrature step-halving difference {difference:e} exceeds tolerance {tolerance:e}")]
    QuadratureTolerance { difference: f64, tolerance: f64 },

    #[error("computationally out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty sample grid")]
    EmptyGrid,

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
