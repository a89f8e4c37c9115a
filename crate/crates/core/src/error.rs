use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("input error: {0}")]
    Input(String),

    #[error("schema mismatch: {malformed} of {total} lines malformed")]
    SchemaMismatch { malformed: usize, total: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty history: no location vectors to build a matrix from")]
    EmptyHistory,

    #[error("degenerate profile: association matrix has rank 0")]
    DegenerateProfile,

    #[error("invalid target profile: {0}")]
    InvalidTarget(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined correlation: zero variance in {0}")]
    UndefinedCorrelation(&'static str),

    #[error("empty report: {0}")]
    EmptyReport(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io(_)
            | Error::Input(_)
            | Error::SchemaMismatch { .. }
            | Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::EmptyHistory
            | Error::InvalidTarget(_)
            | Error::InsufficientData(_)
            | Error::EmptyReport(_) => 2,
            Error::DegenerateProfile | Error::UndefinedCorrelation(_) => 3,
        }
    }
}
