use std::path::Path;

/// Failures of the command-line front end, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        AppError::Runtime(msg.into())
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        AppError::Runtime(format!("{}: {err}", path.display()))
    }

    /// 2 for configuration problems, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Runtime(_) => 3,
        }
    }
}

impl From<mfqr_core::Error> for AppError {
    fn from(e: mfqr_core::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
