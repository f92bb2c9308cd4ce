//! Error type shared by every module in the crate.

use thiserror::Error;

/// Unified error for simulation, training and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    /// Optical grid violates a sampling constraint (pixel resolution,
    /// guard band, or propagation-distance aliasing limit).
    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("integration diverged at step {step} (value {value})")]
    IntegrationDiverged { step: usize, value: f64 },

    /// Signal has no variance or is otherwise unusable.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),

    #[error("degenerate bias: {0}")]
    DegenerateBias(String),

    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    #[error("non-finite field sample at index {0}")]
    InvalidField(usize),

    #[error("parse error in {path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class: 1 for validation problems the caller can fix
    /// by changing arguments or config, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Sampling(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
