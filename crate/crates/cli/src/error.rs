use thiserror::Error;

/// Failures of a command, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, invalid or unreadable configuration, missing input files.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data that cannot be parsed or clustered.
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<uopc::Error> for CliError {
    fn from(e: uopc::Error) -> Self {
        match e {
            uopc::Error::InvalidParameter(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
