use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 0 success, 1 usage, 2 numeric or integration failure, 3 resource limit.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl From<spinsep::Error> for CliError {
    fn from(e: spinsep::Error) -> Self {
        use spinsep::Error::*;
        match e {
            Range { .. }
            | Shape { .. }
            | InvalidParameter(_)
            | EmptyClass
            | NotNormalized { .. } => CliError::Usage(e.to_string()),
            TooLarge(..) => CliError::Resource(e.to_string()),
            NonFinite { .. }
            | Diverged { .. }
            | EmptyWindow { .. }
            | Eigen(_)
            | InfiniteBeta(_)
            | ZeroFrequency => CliError::Numeric(e.to_string()),
        }
    }
}
