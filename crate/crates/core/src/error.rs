use thiserror::Error;

/// Errors raised by geometry, simulation and experiment code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point or geodesic left the domain of its chart.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model produced an unusable metric (not positive definite, singular).
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("geodesic solve failed after {iterations} iterations (residual {residual:.3e})")]
    GeodesicSolve { iterations: usize, residual: f64 },

    #[error("invalid {field}: {message}")]
    InvalidSpec { field: String, message: String },

    #[error("walk step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("coupled step {step} failed: {source}")]
    CouplingStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Innermost error, with step/trial wrappers peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. }
            | Error::CouplingStep { source, .. }
            | Error::Trial { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
