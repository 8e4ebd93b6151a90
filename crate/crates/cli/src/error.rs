//! CLI error type: every failure is either a validation problem (bad flags,
//! bad config, incompatible files — exit code 1) or a runtime failure
//! (I/O, divergence, numerics — exit code 2).

use std::fmt;

#[derive(Debug)]
pub enum AppError {
    /// The invocation itself is wrong; fix the flags/config and retry.
    Validation(String),
    /// The invocation was fine but the run failed.
    Runtime(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Runtime(_) => 2,
        }
    }

    pub fn validation(msg: impl Into<String>) -> AppError {
        AppError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> AppError {
        AppError::Runtime(msg.into())
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Validation(msg) => write!(f, "validation error: {msg}"),
            AppError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for AppError {}

/// Library errors that surface while executing a structurally valid command
/// are runtime failures.
impl From<qlstm_core::Error> for AppError {
    fn from(e: qlstm_core::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
