use thiserror::Error;

/// Failure classes, each with its process exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT_FAILED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<schauder_core::Error> for CliError {
    fn from(e: schauder_core::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}
