use thiserror::Error;

/// Errors raised by configuration handling and by the region, placement and
/// scheduling operations. Decode failures in the simulator are results, not
/// errors, and never show up here.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("degenerate channel: receiver {receiver} has erasure probability 1 but rate {rate} > 0")]
    DegenerateChannel { receiver: usize, rate: f64 },

    #[error("cache capacity exceeded at receiver {receiver}: {needed} bits > {available} bits")]
    CacheCapacity {
        receiver: usize,
        needed: usize,
        available: usize,
    },

    #[error("index error: {0}")]
    Index(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
