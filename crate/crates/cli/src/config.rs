//! Config file schemas. Every config is strict JSON: unknown keys are
//! rejected with an error naming the key, and a top-level seed can be
//! overridden by `--seed` without editing the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use covnet::datagen::{EnsembleSpec, MultiResSpec};
use covnet::experiments::{ScalingSpec, StabilityRunSpec, TransferSpec};
use covnet::vnn::{Optimizer, TrainConfig, VnnArch};
use covnet::{Dataset, TargetSource};

use crate::error::CliError;

pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Where a dataset comes from and how its targets are attached.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub path: PathBuf,
    #[serde(default)]
    pub has_header: bool,
    /// "last" for a trailing target column, a path for a separate
    /// single-column file, or absent for no targets.
    #[serde(default)]
    pub target_col: Option<TargetColumn>,
    /// Divide all samples by the largest sample norm before use.
    #[serde(default)]
    pub rescale_unit_ball: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Keyword(TargetKeyword),
    File { file: PathBuf },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKeyword {
    Last,
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset, CliError> {
        let target = match &self.target_col {
            None => TargetSource::None,
            Some(TargetColumn::Keyword(TargetKeyword::Last)) => TargetSource::LastColumn,
            Some(TargetColumn::File { file }) => TargetSource::SeparateFile(file.clone()),
        };
        let data = Dataset::read_csv(&self.path, self.has_header, &target)?;
        Ok(if self.rescale_unit_ball {
            data.rescaled_to_unit_ball()
        } else {
            data
        })
    }

    /// Overrides from command-line flags.
    pub fn apply_target_flag(&mut self, flag: Option<&str>) {
        if let Some(value) = flag {
            self.target_col = Some(if value == "last" {
                TargetColumn::Keyword(TargetKeyword::Last)
            } else {
                TargetColumn::File {
                    file: PathBuf::from(value),
                }
            });
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "lower")]
pub enum CovScale {
    #[default]
    None,
    Spectral,
}

/// Training hyperparameters as they appear in config files; the run seed
/// comes from the top-level config (or `--seed`), not from here.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub validation_fraction: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let base = TrainConfig::default();
        TrainSettings {
            epochs: base.epochs,
            batch_size: base.batch_size,
            learning_rate: base.learning_rate,
            optimizer: base.optimizer,
            adam_betas: base.adam_betas,
            adam_eps: base.adam_eps,
            validation_fraction: base.validation_fraction,
        }
    }
}

impl TrainSettings {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            adam_betas: self.adam_betas,
            adam_eps: self.adam_eps,
            seed,
            validation_fraction: self.validation_fraction,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Friedman1 {
        n: usize,
        m: usize,
        noise_sd: f64,
    },
    Lowrank {
        n: usize,
        m: usize,
        n_informative: usize,
        effective_rank: usize,
        tail_strength: f64,
        noise_sd: f64,
    },
    GaussianEnsemble {
        ensemble: EnsembleSpec,
        n: usize,
    },
    Multires {
        spec: MultiResSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatagenConfig {
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub seed: u64,
    /// Write a header row in emitted CSVs.
    #[serde(default)]
    pub with_header: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data: DataSource,
    pub arch: VnnArch,
    #[serde(default)]
    pub train: TrainSettings,
    #[serde(default)]
    pub cov_scale: CovScale,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub data: DataSource,
    pub model_path: PathBuf,
    /// Dataset whose sample covariance drives the forward pass; defaults
    /// to `data` itself (the covariance-swap semantics).
    #[serde(default)]
    pub cov_data: Option<DataSource>,
    #[serde(default)]
    pub cov_scale: CovScale,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaConfig {
    pub data: DataSource,
    /// Retained components; defaults to all.
    #[serde(default)]
    pub components: Option<usize>,
    /// Per-component gains; defaults to unit gains (exact PCA scores).
    #[serde(default)]
    pub gains: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub data: DataSource,
    pub kernel: covnet::baseline::BaselineKernel,
    /// Fixed component count; absent means cross-validated selection.
    #[serde(default)]
    pub components: Option<usize>,
    #[serde(default)]
    pub candidates: Option<Vec<usize>>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Evaluation dataset; defaults to the training data.
    #[serde(default)]
    pub eval_data: Option<DataSource>,
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub data: DataSource,
    pub spec: StabilityRunSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub spec: ScalingSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzConfig {
    /// Ensemble providing the covariance pair: the exact ensemble matrix
    /// against a sample covariance from `sample_n` seeded draws.
    pub ensemble: EnsembleSpec,
    pub sample_n: usize,
    pub arch: VnnArch,
    pub n_inputs: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum TransferData {
    Generate { multires: MultiResSpec },
    Files { datasets: Vec<ResolutionFile> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionFile {
    pub resolution: usize,
    #[serde(flatten)]
    pub source: DataSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub data: TransferData,
    pub spec: TransferSpec,
}
