use quadcool_core::Error;

/// Failures, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Diverged(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Input(String),
    #[error("sweep: {0}")]
    SweepFailed(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn config(field: &str, reason: &str) -> Self {
        CliError::Config(format!("field `{field}`: {reason}"))
    }

    /// Classifies a core error raised while handling `field`.
    pub fn core(field: &str, e: Error) -> Self {
        match e {
            Error::Diverged { .. } | Error::NonFinite { .. } => CliError::Diverged(e.to_string()),
            Error::InvalidParameter { .. }
            | Error::Untrapped { .. }
            | Error::NotCooling { .. }
            | Error::StepTooLarge { .. }
            | Error::Domain(_) => CliError::config(field, &e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Io(_) => 4,
            CliError::Input(_) => 5,
            CliError::SweepFailed(_) => 6,
            CliError::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
