use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("mode vanishes in the {partition} partition (norm {norm:.3e})")]
    PartitionDegenerate { partition: &'static str, norm: f64 },

    #[error(
        "step count {steps} not converged: estimated relative change of Tr(D) \
         under step doubling is {relative_change:.3e} (limit {limit:.1e})"
    )]
    StepCount {
        steps: usize,
        relative_change: f64,
        limit: f64,
    },

    #[error("numerical blow-up (non-finite value) at z = {z:.6e} m")]
    NumericalBlowup { z: f64 },

    #[error("gain calibration failed: {0}")]
    Calibration(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl Error {
    /// Process exit status for the command-line tool: 2 for bad input, 3 for
    /// numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Config(_) => 2,
            Error::PartitionDegenerate { .. }
            | Error::StepCount { .. }
            | Error::NumericalBlowup { .. }
            | Error::Calibration(_)
            | Error::Eigen(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
