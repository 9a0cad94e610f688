use peaks_core::PeaksError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed problem files, out-of-range parameters: exit 2.
    #[error("input error: {0}")]
    Input(String),
    /// An artifact did not survive verification: exit 1.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Verification(_) => 1,
        }
    }
}

impl From<PeaksError> for CliError {
    fn from(e: PeaksError) -> Self {
        match e {
            PeaksError::Parameter(_) => CliError::Input(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}
