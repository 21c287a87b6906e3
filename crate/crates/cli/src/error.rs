use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] conformal_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// A deterministic claim failed; the report was still written.
    #[error("invariant violated: {0}")]
    Violation(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use conformal_core::Error as E;
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Violation(_) => ExitCode::from(3),
            CliError::Io { .. } => ExitCode::from(1),
            CliError::Core(e) => match e {
                E::Invariant(_) => ExitCode::from(3),
                E::Io(_) | E::Statistical { .. } | E::NonConvergence { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            },
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
