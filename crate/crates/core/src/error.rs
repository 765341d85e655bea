use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid fractal: {0}")]
    InvalidFractal(String),

    #[error("vertex identification is ambiguous at level {level}: distance {distance:e} lies in the band ({eps:e}, {band:e})")]
    Precision {
        level: usize,
        distance: f64,
        eps: f64,
        band: f64,
    },

    #[error("level mismatch: expected level {expected}, got {actual}")]
    LevelMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("traced energy is not representable in the {family} family (relative residual {residual:e})")]
    ModelMismatch { family: String, residual: f64 },

    #[error("resolution error: quadrature level {level} too coarse for radius {radius} (need ratio^m <= r/4)")]
    Resolution { level: usize, radius: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("level {level} exceeds the memory guard ({cells} cells > {limit})")]
    MemoryGuard {
        level: usize,
        cells: u64,
        limit: u64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
