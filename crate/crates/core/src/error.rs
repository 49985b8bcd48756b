use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite input sample {value} at index {index}")]
    NonFiniteInput { index: u64, value: f64 },

    #[error("numeric fault in channel {channel}: state became non-finite")]
    NumericFault { channel: usize },

    #[error("singular denominator ({0:e})")]
    Singularity(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("gain fit failed: {0}")]
    Fit(String),

    #[error("datapath contract: {0}")]
    Datapath(String),

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: u64, msg: String },

    #[error("truncated data: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("framing error: {len} bytes is not a multiple of {frame} bytes")]
    Framing { len: u64, frame: u64 },

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
