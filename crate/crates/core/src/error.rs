use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Kernel evaluated at (or within roundoff of) the origin of the torus.
    #[error("kernel evaluated at the singular point (distance {distance:e} from the origin)")]
    SingularPoint { distance: f64 },

    /// Two vortices coincide where the exact kernel must be evaluated between them.
    #[error("vortices {i} and {j} coincide (distance {distance:e})")]
    SingularConfiguration { i: usize, j: usize, distance: f64 },

    /// Minimum pair distance fell below the collision radius at time `t`.
    #[error("near collision at t = {t}: minimum pair distance {distance:e} below collision radius")]
    NearCollision { t: f64, distance: f64 },

    #[error("integrator step budget exhausted at t = {t} after {steps} steps")]
    StepLimit { t: f64, steps: usize },

    #[error("kernel table error {max_error:e} exceeds tolerance {tolerance:e}")]
    TableAccuracy { max_error: f64, tolerance: f64 },

    #[error("inverse temperature {beta} outside the finite-partition range (beta < {limit})")]
    InvalidTemperature { beta: f64, limit: f64 },

    #[error("no configuration with |H - {energy}| <= {width} found after {attempts} proposals")]
    EmptyShell {
        energy: f64,
        width: f64,
        attempts: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
