use std::process::ExitCode;

use thiserror::Error;

/// Harness-level failures, split by the exit-code contract:
/// 0 success, 2 validation, 3 runtime/numeric.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration: unknown key, missing file content, or a field
    /// outside its domain.
    #[error("invalid config: {0}")]
    Validation(String),

    /// Simulation or numeric failure after validation passed.
    #[error("runtime: {0}")]
    Runtime(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            HarnessError::Validation(_) => ExitCode::from(2),
            HarnessError::Runtime(_) | HarnessError::Io(_) => ExitCode::from(3),
        }
    }
}

impl From<vrsim_core::Error> for HarnessError {
    fn from(e: vrsim_core::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
