use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("reading config {}: {source}", path.display())]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0} self-test check(s) failed")]
    SelfTest(usize),
    #[error(transparent)]
    Model(#[from] lis_secrecy::Error),
}

impl SimError {
    /// Process exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Parse { .. } | SimError::Config(_) | SimError::ConfigRead { .. } => 1,
            _ => 2,
        }
    }
}

pub type SimResult<T> = Result<T, SimError>;
