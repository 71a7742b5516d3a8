//! CLI error type and its mapping onto exit codes.

use std::path::PathBuf;

use gazegate_core::error::{
    AudioError, ConfigError, DspError, FaceError, SceneError, SessionError, WakeError,
};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const EXPECTATION: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no files match `{0}`")]
    NoMatches(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Wake(#[from] WakeError),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("expectations not met: {0}")]
    Expectation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::USAGE,
            CliError::Expectation(_) => exit::EXPECTATION,
            _ => exit::DATA,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
