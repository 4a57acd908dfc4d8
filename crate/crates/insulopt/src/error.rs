use insulopt_core::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    BadInput(String),
    #[error("{0}")]
    NoConvergence(String),
    #[error("{0}")]
    Bracket(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 bad input, 3 no convergence, 4 bracket failure, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Bracket(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::GradientProbe { .. } => CliError::NoConvergence(e.to_string()),
            _ => CliError::BadInput(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
