use std::fmt;
use std::process::ExitCode;

use poisson_control::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or model parameters.
    Invalid(String),
    /// A solver gave up or a truncation was too small.
    NoConvergence(String),
    Io(String),
    /// `validate` found a check above its tolerance.
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Invalid(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Io(_) => 4,
            CliError::Validation(_) => 5,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::NoConvergence(m) => write!(f, "no convergence: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence(_)
            | Error::TruncationTooSmall { .. }
            | Error::QuadratureFailure(_)
            | Error::SingularBoundary(_)
            | Error::SingularSystem(_) => CliError::NoConvergence(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
