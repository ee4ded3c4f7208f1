use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("obstacle radius {r} must satisfy 0 <= r < (2 - sqrt 2) L = {limit}")]
    ObstacleTooLarge { r: f64, limit: f64 },

    #[error("forcing has box mean {mean:e}, the periodic limit problem has no solution")]
    NonZeroMean { mean: f64 },

    #[error("Krylov solve stalled after {iterations} iterations at relative residual {residual:e}")]
    KrylovStall { iterations: usize, residual: f64 },

    #[error("empty obstacle: the periodic Laplacian has constants in its kernel")]
    NonCoerciveDomain,

    #[error("CFL violation at step {step}: dt*max|u|/h = {cfl} exceeds cap {cap}")]
    CflViolation { step: usize, cfl: f64, cap: f64 },

    #[error("annulus inner radius {0} outside (0, 2)")]
    InvalidEpsilon(f64),

    #[error("quadrature did not converge after {evaluations} evaluations (error estimate {estimate:e})")]
    QuadratureNotConverged { evaluations: usize, estimate: f64 },

    #[error("field requires L = pi, got L = {0}")]
    IncompatibleBox(f64),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("solver failed at r = {r}: {source}")]
    AtRadius {
        r: f64,
        #[source]
        source: Box<LabError>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub(crate) fn at_radius(self, r: f64) -> LabError {
        LabError::AtRadius {
            r,
            source: Box::new(self),
        }
    }

    /// Strips radius annotations.
    pub fn root(&self) -> &LabError {
        match self {
            LabError::AtRadius { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self.root(),
            LabError::Config(_)
                | LabError::InvalidGrid(_)
                | LabError::ObstacleTooLarge { .. }
                | LabError::InvalidSettings(_)
                | LabError::IncompatibleBox(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
