use std::path::Path;

use serde::{Deserialize, Serialize};
use tempora_core::baselines::SvmConfig;
use tempora_core::nn::TpmNetConfig;
use tempora_core::signal::PrepConfig;
use tempora_core::synth::CohortConfig;
use tempora_core::train::TrainConfig;

use crate::CliError;

/// Environment variable that overrides the seed of a config file.
pub const SEED_ENV: &str = "TEMPORA_SEED";
/// File name of the echoed configuration in every output directory.
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

/// Everything a command needs besides its paths.
///
/// `seed` is authoritative: it is copied into the cohort and training sections
/// when the configuration is resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    /// Folds for cross-validation; 0 selects the single stratified hold-out split.
    pub cv: usize,
    /// Also train and evaluate NB, SVM-LR, SVM-RBF, CNN and BiLSTM.
    pub baselines: bool,
    pub bilstm_hidden: usize,
    pub cohort: CohortConfig,
    pub prep: PrepConfig,
    pub model: TpmNetConfig,
    pub train: TrainConfig,
    pub svm: SvmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            jobs: 1,
            cv: 0,
            baselines: false,
            bilstm_hidden: 64,
            cohort: CohortConfig::default(),
            prep: PrepConfig::default(),
            model: TpmNetConfig::default(),
            train: TrainConfig::default(),
            svm: SvmConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub cv: Option<usize>,
    pub baselines: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Defaults, then the file, then `TEMPORA_SEED`, then flags.
    pub fn resolve(
        file: Option<&Path>,
        env_seed: Option<&str>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        if let Some(s) = env_seed {
            cfg.seed = s.trim().parse().map_err(|_| {
                CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))
            })?;
        }
        if let Some(s) = flags.seed {
            cfg.seed = s;
        }
        if let Some(j) = flags.jobs {
            cfg.jobs = j;
        }
        if let Some(k) = flags.cv {
            cfg.cv = k;
        }
        cfg.baselines |= flags.baselines;
        cfg.cohort.seed = cfg.seed;
        cfg.train.seed = cfg.seed;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.jobs == 0 {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        if self.cv == 1 {
            return Err(CliError::Usage(
                "cv must be 0 (hold-out) or at least 2".into(),
            ));
        }
        if self.bilstm_hidden == 0 {
            return Err(CliError::Usage("bilstm_hidden must be positive".into()));
        }
        self.cohort
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.model
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }

    /// Writes the resolved configuration into `dir`.
    pub fn echo(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(RESOLVED_CONFIG_FILE);
        std::fs::write(&path, self.to_toml()).map_err(|e| tempora_core::Error::io(path, e).into())
    }
}
