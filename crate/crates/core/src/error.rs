use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("solver diverged: non-finite temperature at cell ({x}, {y})")]
    Divergence { x: usize, y: usize },

    #[error("solver did not converge within {sweeps} sweeps (max delta {max_delta:.6} C)")]
    Convergence { sweeps: usize, max_delta: f64 },

    #[error("device placement: {0}")]
    Placement(String),

    #[error("wall thinning would merge rooms at ({x}, {y})")]
    RoomMerge { x: usize, y: usize },

    #[error("episode format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl SimError {
    /// True for failures of the numerical solver (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, SimError::Divergence { .. } | SimError::Convergence { .. })
    }

    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        SimError::File {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
