//! Job files, experiment commands and result writers behind the `qutrit-ctrl` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::run;
pub use config::{load_config, write_config, AxisSpec, Command, JobConfig, SpectroscopyOptions};
pub use output::{write_result, CommandOutput, RunInfo, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qutrit_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for invalid input, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        use qutrit_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidParameter(_) | E::ZeroDetuning | E::ShiftPole { .. }) => 2,
            CliError::Core(E::Io(_)) | CliError::Io(_) => 1,
            CliError::Core(_) => 3,
        }
    }
}
