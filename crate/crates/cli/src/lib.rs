//! Experiment runner: configuration, training runs, runtime-model curves and
//! codec checks.

pub mod config;
pub mod curves;
pub mod train;
pub mod verify;

use std::path::{Path, PathBuf};

use codenet_core::dataset::DatasetError;
use codenet_core::strategies::{CheckpointError, StrategyError, TrainError};
use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CHECK: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}: {1}")]
    Checkpoint(PathBuf, CheckpointError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => EXIT_IO,
            CliError::Config(_) | CliError::Usage(_) | CliError::Strategy(_) => EXIT_CONFIG,
            CliError::Train(TrainError::Strategy(_) | TrainError::EmptyDataset | TrainError::BadPeriod) => EXIT_CONFIG,
            CliError::Checkpoint(_, CheckpointError::Incompatible(_)) => EXIT_CONFIG,
            CliError::Train(TrainError::Checkpoint(CheckpointError::Incompatible(_))) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Dataset(_) | CliError::Checkpoint(..) | CliError::Train(_) => EXIT_IO,
        }
    }
}
