use thiserror::Error;

/// Errors raised while constructing operators, meshes, or evolving a
/// semi-discretisation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sub-cells do not abut: left cell ends at {left_end}, right cell starts at {right_start}")]
    NotAbutting { left_end: f64, right_start: f64 },

    #[error("exactness spaces differ: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("space not unisolvent on nodes ({nodes} nodes, dimension {dim})")]
    NotUnisolvent { nodes: usize, dim: usize },

    #[error("invalid thermodynamic state at {location}: {detail}")]
    InvalidState { location: String, detail: String },

    #[error("numerical flux `{flux}` is not defined for {law}")]
    UnsupportedFlux { flux: String, law: String },

    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    StepLimit { t: f64, max_steps: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("eigenvalue solver failed to converge for a {n}x{n} matrix")]
    EigenFailure { n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Attach a location to an invalid-state error produced by a pointwise
    /// routine.
    pub(crate) fn at(self, location: impl Into<String>) -> Self {
        match self {
            Error::InvalidState { detail, .. } => Error::InvalidState {
                location: location.into(),
                detail,
            },
            other => other,
        }
    }
}
