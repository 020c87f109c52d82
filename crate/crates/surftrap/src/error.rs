use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A series hit its term cap before meeting its tolerance.
    #[error("series in {op} not converged after {terms} terms (last relative term {last:.3e})")]
    Series { op: &'static str, terms: usize, last: f64 },

    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature error estimate {estimate:.3e} exceeds target {target:.3e} after {evals} evaluations")]
    Quadrature { estimate: f64, target: f64, evals: usize },

    /// Evaluation exactly at a point singularity.
    #[error("singular point: {0}")]
    Singular(String),

    /// Inconsistent or insufficient configuration of an operation.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative method or stability check did not settle.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A precondition of the caller was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Electrode or gap geometry is inconsistent.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A linear system is numerically singular.
    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    /// True for failures of iterative numerics rather than bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::Series { .. } | Error::Quadrature { .. } | Error::Convergence(_) | Error::IllConditioned(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
