use std::path::PathBuf;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("weight function is negative ({value}) at quadrature node alpha = {alpha}")]
    InvalidWeight { alpha: f64, value: f64 },

    #[error("operator assembly failed: {0}")]
    AssemblyFailure(String),

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("nonlinear iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    NonlinearDivergence { iterations: usize, increment: f64 },

    #[error("invalid manufactured solution: {0}")]
    InvalidManufacturedSolution(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid run specification: {0}")]
    InvalidSpec(String),

    #[error("at time level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        match self {
            e @ Error::AtLevel { .. } => e,
            e => Error::AtLevel { level, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
