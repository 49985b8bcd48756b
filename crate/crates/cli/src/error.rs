use carfac::Error;

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;
pub const EXIT_ENGINE: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("schedule infeasible: {used} cycles per sample needed, {budget} available")]
    Infeasible { used: u64, budget: u64 },

    #[error(transparent)]
    Core(#[from] Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Infeasible { .. } => EXIT_INFEASIBLE,
            CliError::Core(e) => match e {
                Error::Config(_) => EXIT_USAGE,
                Error::Io(_)
                | Error::File { .. }
                | Error::Parse { .. }
                | Error::Truncated { .. }
                | Error::Unsupported(_)
                | Error::Framing { .. } => EXIT_IO,
                _ => EXIT_ENGINE,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
