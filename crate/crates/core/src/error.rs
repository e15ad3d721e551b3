use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("invalid traffic distribution: {0}")]
    Distribution(String),

    #[error("scheduler consistency violation: {0}")]
    Consistency(String),

    #[error("empty queue: {0}")]
    EmptyQueue(String),

    #[error("unsupported oracle request: {0}")]
    Oracle(String),

    #[error("incomplete metric grid: {0}")]
    IncompleteGrid(String),

    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },

    #[error("workload line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("table format: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
