use crate::Vec3;

/// Errors raised by field, potential and analysis routines.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum Error {
    #[error("invalid species: {0}")]
    InvalidSpecies(String),

    #[error("invalid drive: {0}")]
    InvalidDrive(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("point ({:.6e}, {:.6e}, {:.6e}) lies within the exclusion radius of wire {wire}", point.x, point.y, point.z)]
    Singularity { wire: usize, point: Vec3 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("|B_DC| = {field:.3e} T is below the zero threshold; quantization axis undefined")]
    UndefinedQuantizationAxis { field: f64 },

    #[error("potential is not differentiable at a point with zero detuning and zero Rabi frequency")]
    NonDifferentiable,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("iso-level {level:.6e} outside the sampled range [{min:.6e}, {max:.6e}]")]
    EmptyMesh { level: f64, min: f64, max: f64 },

    #[error("no interior minimum found: {0}")]
    NotFound(String),

    #[error("degenerate endpoints: {0}")]
    DegenerateEndpoints(String),

    #[error("saddle search did not converge after {iterations} iterations (|grad| = {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best_path: Vec<Vec3>,
    },

    #[error("bracket [{lo}, {hi}] does not straddle the touch tolerance")]
    NoBracket { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
