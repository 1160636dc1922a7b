use std::fmt;
use std::process::ExitCode;

/// Failures mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Some property suite failed.
    Verify,
    /// Bad flags, config file or model parameters.
    Config(String),
    /// A size cap (contraction width, dense oracle) would be exceeded.
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Verify => 1,
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verify => f.write_str("verification failed"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl From<fermicone::Error> for CliError {
    fn from(e: fermicone::Error) -> Self {
        if e.is_resource_limit() {
            CliError::Resource(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("output: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("output: {e}"))
    }
}
