use namescarcity_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const IO: i32 = 4;
    pub const CONFIG: i32 = 5;
    pub const ANALYSIS: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

fn csv_code(e: &csv::Error) -> i32 {
    if matches!(e.kind(), csv::ErrorKind::Io(_)) {
        exit::IO
    } else {
        exit::INPUT
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::File { .. } | CliError::Io(_) | CliError::Json(_) => exit::IO,
            CliError::Csv(e) => csv_code(e),
            CliError::Core(e) => match e {
                CoreError::Schema(_)
                | CoreError::Parse { .. }
                | CoreError::EmptyAfterNormalization(_)
                | CoreError::InvalidPValue(_)
                | CoreError::EmptyInput => exit::INPUT,
                CoreError::Io(_) => exit::IO,
                CoreError::Csv(e) => csv_code(e),
                CoreError::InvalidConfig(_) => exit::CONFIG,
                _ => exit::ANALYSIS,
            },
        }
    }
}
