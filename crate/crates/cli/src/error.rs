use std::path::PathBuf;

use thiserror::Error;

use riesz_core::Error as CoreError;

/// Failures of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const PRECONDITION: i32 = 2;
    pub const NON_CONVERGENCE: i32 = 3;
    pub const IO: i32 = 4;
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                CoreError::NonConvergence { .. } | CoreError::Quadrature { .. } => exit::NON_CONVERGENCE,
                CoreError::Io(_) | CoreError::Json(_) | CoreError::Format(_) => exit::IO,
                _ => exit::PRECONDITION,
            },
            CliError::Config(_) | CliError::DegenerateFit(_) => exit::PRECONDITION,
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => exit::IO,
        }
    }
}
