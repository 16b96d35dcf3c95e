use std::path::PathBuf;

/// Failures of a command invocation, each with one exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("integration stopped: {0}")]
    Integration(thermomech::Error),
    #[error("second-law audit rejected the trajectory (minimum margin {0:e})")]
    SecondLaw(f64),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 1 configuration or I/O, 2 guard violation or integrator breakdown,
    /// 3 Second-Law rejection, 4 failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Csv(_) => 1,
            CliError::Integration(_) => 2,
            CliError::SecondLaw(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

/// Errors raised while building a scenario are configuration errors; errors
/// raised while integrating are runtime failures.
pub fn build_error(e: thermomech::Error) -> CliError {
    match e {
        thermomech::Error::InvalidConfig(msg) => CliError::Config(msg),
        other => CliError::Config(other.to_string()),
    }
}

pub(crate) fn run_error(e: thermomech::Error) -> CliError {
    match e {
        thermomech::Error::InvalidConfig(msg) => CliError::Config(msg),
        other => CliError::Integration(other),
    }
}

pub type CliResult<T> = Result<T, CliError>;
