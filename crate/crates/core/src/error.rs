use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs outside the domain where a formula or solver is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver ran out of iterations or lost its bracket.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { solver: &'static str, iterations: usize, residual: f64 },

    /// A Monte Carlo trial failed; carries the trial index.
    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Domain(_) => false,
            Error::NoConvergence { .. } => true,
            Error::Trial { source, .. } => source.is_solver_failure(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
