//! Batch pipelines over the `tempora-core` algorithms: cohort synthesis,
//! model training, time-change analysis and a merged summary.

mod args;
pub mod commands;
pub mod config;
pub mod pipeline;
pub mod report;

pub use args::{AnalyzeArgs, Cli, Command, CommonArgs, ReportArgs, SynthArgs, TrainArgs};
pub use commands::run;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] tempora_core::Error),
}

impl CliError {
    /// 1 for usage errors, 3 for numeric failures, 2 for everything data-related.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if !e.is_data_error() => 3,
            CliError::Core(_) => 2,
        }
    }
}
