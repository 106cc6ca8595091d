use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid configuration, input file or output location.
    #[error("{0}")]
    Config(String),
    /// Inversion or domain failures while evaluating, with their locations.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Numeric(_) => ExitCode::from(2),
        }
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        CliError::Config(format!("{what}: {e}"))
    }
}
