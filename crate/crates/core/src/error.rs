use thiserror::Error;

pub type Result<T, E = CqedError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CqedError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("numeric failure in {context} (residual {residual:e})")]
    Numeric { context: String, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: {what} needs dimension {needed} but the limit is {limit}; {advice}")]
    Capacity {
        what: String,
        needed: usize,
        limit: usize,
        advice: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CqedError {
    pub(crate) fn numeric(context: impl Into<String>, residual: f64) -> Self {
        CqedError::Numeric {
            context: context.into(),
            residual,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            CqedError::Config(_)
            | CqedError::Parse { .. }
            | CqedError::Validation(_)
            | CqedError::InvalidGrid(_)
            | CqedError::InvalidPotential(_)
            | CqedError::Calibration(_) => 2,
            CqedError::Numeric { .. }
            | CqedError::Capacity { .. }
            | CqedError::Degenerate(_)
            | CqedError::DimensionMismatch(_) => 3,
            CqedError::Io(_) => 1,
        }
    }
}
