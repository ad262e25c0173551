use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "tempora",
    version,
    about = "Time-perception modeling from physiological sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort into a dataset directory.
    Synth(SynthArgs),
    /// Preprocess a dataset, train and evaluate the models.
    Train(TrainArgs),
    /// Correlate subjective time change with questionnaire scores.
    Analyze(AnalyzeArgs),
    /// Merge train and analyze outputs into summary.md.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed and `TEMPORA_SEED`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            jobs: self.jobs,
            ..Overrides::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Stratified K-fold cross-validation instead of the hold-out split.
    #[arg(long)]
    pub cv: Option<usize>,
    /// Also train NB, SVM-LR, SVM-RBF, CNN and BiLSTM.
    #[arg(long)]
    pub baselines: bool,
    /// Print one line per epoch to stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Correlate only non-baseline conditions in the absolute panel.
    #[arg(long)]
    pub conditions_only: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directories holding train and analyze outputs.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
}
