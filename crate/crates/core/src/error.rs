use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("geometry infeasible: {0}")]
    GeometryInfeasible(String),

    #[error("meshing error: {0}")]
    Meshing(String),

    #[error("assembly error in element {element}: {reason}")]
    Assembly { element: usize, reason: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("eigensolver did not converge after {iterations} restarts (worst residual {worst_residual:.3e})")]
    NonConvergence { iterations: usize, worst_residual: f64, residuals: Vec<f64> },

    #[error("target {target:.6e} Hz is unreachable; achievable range is [{min:.6e}, {max:.6e}] Hz")]
    InfeasibleTarget { target: f64, min: f64, max: f64 },

    #[error("solve failed at k = {k:.6e} rad/m: {source}")]
    SweepPoint {
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("bisection failed between {lo:.6e} and {hi:.6e} Hz: {reason}")]
    Bisection { lo: f64, hi: f64, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::GeometryInfeasible(msg.into())
    }
}
