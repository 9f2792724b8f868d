use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input file, flag or output location: exit code 2.
    #[error("{0}")]
    Input(String),
    /// A computed result failed its own consistency check: exit code 3.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<teamcomp_core::Error> for CliError {
    fn from(e: teamcomp_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
