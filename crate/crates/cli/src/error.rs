use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] syncap_core::Error),

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        use syncap_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Core(E::NotConverged { .. }) => 2,
            CliError::Core(E::GuardExceeded { .. } | E::BudgetExceeded { .. }) => 3,
            CliError::Core(_) => 1,
            CliError::ReplayMismatch(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
