//! Stability under sample-covariance perturbation.
//!
//! Each trial draws a seeded permutation of the dataset, takes the leading
//! 90% as the training split, fits a nominal model against the covariance
//! of the first `nominal_n` samples of that ordering, and then replaces the
//! covariance with ones computed from other prefixes of the same ordering.
//! Prefixes make the sweep nested: growing `n'` only appends samples. VNN
//! models are rebound via covariance swap; PCA models keep their regression
//! weights and reproject onto the perturbed eigenbasis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{
    cv_select_components, default_component_candidates, default_rbf_gamma, fit_pca_linear,
    fit_pca_rbf, reproject_with, BaselineKernel, PcaRegressor,
};
use crate::datagen::rng::{derive_seed, SeededRng};
use crate::error::{Error, Result};
use crate::experiments::{
    aggregate_metric_sets, mae, pearson, MetricAggregate, MetricSet, Provenance,
};
use crate::numcore::{format_f64, sample_covariance, CovarianceModel, Dataset};
use crate::vnn::{train, BoundVnn, TrainConfig, VnnArch, VnnModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFamily {
    Vnn {
        arch: VnnArch,
        train: TrainConfig,
    },
    PcaLr {
        /// Component candidates; defaults to the standard grid.
        candidates: Option<Vec<usize>>,
    },
    PcaRbf {
        candidates: Option<Vec<usize>>,
        /// Bandwidth; defaults to `1 / (c * var(scores))`.
        gamma: Option<f64>,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityRunSpec {
    /// Samples used for the nominal covariance (a prefix of each trial's
    /// ordering; at most the training split size).
    pub nominal_n: usize,
    /// Perturbed covariance sizes, each in `[2, n]`.
    pub perturb_grid: Vec<usize>,
    pub trials: usize,
    pub family: ModelFamily,
    pub seed: u64,
    /// Ablation: flip each perturbed eigenvector to agree in sign with the
    /// nominal basis before PCA reprojection, instead of the default
    /// standalone sign canon. Off by default; the default is what exposes
    /// the sign-convention sensitivity.
    #[serde(default)]
    pub align_eigenvectors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetrics {
    pub n_prime: usize,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial: usize,
    pub nominal: MetricSet,
    pub per_grid: Vec<GridMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAggregate {
    pub n_prime: usize,
    #[serde(flatten)]
    pub aggregate: MetricAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub spec: StabilityRunSpec,
    pub trials: Vec<TrialMetrics>,
    pub nominal_aggregate: MetricAggregate,
    pub aggregates: Vec<GridAggregate>,
    pub provenance: Provenance,
}

impl StabilityReport {
    /// One row per trial and grid point (the nominal evaluation included as
    /// kind `nominal`), ready for external plotting.
    pub fn to_tidy_csv(&self) -> String {
        let mut out =
            String::from("trial,kind,n_prime,mae_train,mae_test,pearson_train,pearson_test\n");
        for trial in &self.trials {
            push_row(
                &mut out,
                trial.trial,
                "nominal",
                self.spec.nominal_n,
                &trial.nominal,
            );
            for grid in &trial.per_grid {
                push_row(
                    &mut out,
                    trial.trial,
                    "perturbed",
                    grid.n_prime,
                    &grid.metrics,
                );
            }
        }
        out
    }
}

fn push_row(out: &mut String, trial: usize, kind: &str, n_prime: usize, m: &MetricSet) {
    out.push_str(&format!(
        "{trial},{kind},{n_prime},{},{},{},{}\n",
        format_f64(m.mae_train),
        format_f64(m.mae_test),
        format_f64(m.pearson_train),
        format_f64(m.pearson_test),
    ));
}

enum FittedModel {
    Vnn(BoundVnn),
    Pca(PcaRegressor),
}

impl FittedModel {
    fn evaluate(
        &self,
        cov: &CovarianceModel,
        train_data: &Dataset,
        test_data: &Dataset,
        align_to_nominal: bool,
    ) -> Result<MetricSet> {
        let (pred_train, pred_test) = match self {
            FittedModel::Vnn(bound) => {
                let swapped = crate::vnn::swap_covariance(bound, cov.clone());
                (
                    swapped.predict_dataset(train_data)?,
                    swapped.predict_dataset(test_data)?,
                )
            }
            FittedModel::Pca(reg) => {
                let eigen = if align_to_nominal {
                    cov.eigen()?.aligned_to(reg.eigen_basis())?
                } else {
                    cov.eigen()?.clone()
                };
                let project = |data: &Dataset| -> Result<Vec<f64>> {
                    (0..data.n_samples())
                        .map(|i| reproject_with(&eigen, reg, data.sample(i)))
                        .collect()
                };
                (project(train_data)?, project(test_data)?)
            }
        };
        let train_y = train_data.require_targets("stability metrics")?;
        let test_y = test_data.require_targets("stability metrics")?;
        Ok(MetricSet {
            mae_train: mae(&pred_train, train_y)?,
            mae_test: mae(&pred_test, test_y)?,
            pearson_train: pearson(&pred_train, train_y)?,
            pearson_test: pearson(&pred_test, test_y)?,
        })
    }
}

pub fn stability_experiment(data: &Dataset, spec: &StabilityRunSpec) -> Result<StabilityReport> {
    let n = data.n_samples();
    data.require_targets("stability experiment")?;
    if spec.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if spec.nominal_n < 2 || spec.nominal_n > n {
        return Err(Error::InvalidParameter(format!(
            "nominal_n {} outside [2, {n}]",
            spec.nominal_n
        )));
    }
    if let Some(&bad) = spec.perturb_grid.iter().find(|&&g| g < 2 || g > n) {
        return Err(Error::InvalidParameter(format!(
            "grid value {bad} outside [2, {n}]"
        )));
    }

    let trials: Vec<TrialMetrics> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(data, spec, t))
        .collect::<Result<Vec<_>>>()?;

    let nominal_aggregate =
        aggregate_metric_sets(&trials.iter().map(|t| t.nominal).collect::<Vec<_>>());
    let aggregates = spec
        .perturb_grid
        .iter()
        .enumerate()
        .map(|(gi, &n_prime)| GridAggregate {
            n_prime,
            aggregate: aggregate_metric_sets(
                &trials
                    .iter()
                    .map(|t| t.per_grid[gi].metrics)
                    .collect::<Vec<_>>(),
            ),
        })
        .collect();

    Ok(StabilityReport {
        spec: spec.clone(),
        trials,
        nominal_aggregate,
        aggregates,
        provenance: Provenance::new(spec.seed, spec),
    })
}

fn run_trial(data: &Dataset, spec: &StabilityRunSpec, trial: usize) -> Result<TrialMetrics> {
    let n = data.n_samples();
    let trial_seed = derive_seed(spec.seed, trial as u64);
    let mut rng = SeededRng::with_stream(trial_seed, 0);
    let ordering = rng.permutation(n);

    let train_n = n - n / 10;
    if spec.nominal_n > train_n {
        return Err(Error::InvalidParameter(format!(
            "nominal_n {} exceeds the training split size {train_n}",
            spec.nominal_n
        )));
    }
    let train_data = data.subset(&ordering[..train_n])?;
    let test_data = data.subset(&ordering[train_n..])?;

    let nominal_cov = sample_covariance(&data.subset(&ordering[..spec.nominal_n])?);

    let fitted = match &spec.family {
        ModelFamily::Vnn { arch, train: cfg } => {
            let init = VnnModel::from_arch(arch, derive_seed(trial_seed, 1))?;
            let mut cfg = cfg.clone();
            cfg.seed = derive_seed(trial_seed, 2);
            let (model, _) = train(&init, &nominal_cov, &train_data, &cfg)?;
            FittedModel::Vnn(BoundVnn::bind(model, nominal_cov.clone()))
        }
        ModelFamily::PcaLr { candidates } => {
            let eigen = nominal_cov.eigen()?;
            let cands = candidates
                .clone()
                .unwrap_or_else(|| default_component_candidates(data.n_features(), train_n));
            let c = cv_select_components(
                &train_data,
                eigen,
                &cands,
                BaselineKernel::Linear,
                derive_seed(trial_seed, 3),
            )?;
            FittedModel::Pca(fit_pca_linear(&train_data, eigen, c)?)
        }
        ModelFamily::PcaRbf {
            candidates,
            gamma,
            lambda,
        } => {
            let eigen = nominal_cov.eigen()?;
            let cands = candidates
                .clone()
                .unwrap_or_else(|| default_component_candidates(data.n_features(), train_n));
            let c = cv_select_components(
                &train_data,
                eigen,
                &cands,
                BaselineKernel::Rbf,
                derive_seed(trial_seed, 3),
            )?;
            let gamma = match gamma {
                Some(g) => *g,
                None => default_rbf_gamma(&train_data, eigen, c)?,
            };
            FittedModel::Pca(fit_pca_rbf(&train_data, eigen, c, gamma, *lambda)?)
        }
    };

    let nominal = fitted.evaluate(&nominal_cov, &train_data, &test_data, false)?;
    let per_grid = spec
        .perturb_grid
        .iter()
        .map(|&n_prime| {
            let cov = if n_prime == spec.nominal_n {
                nominal_cov.clone()
            } else {
                sample_covariance(&data.subset(&ordering[..n_prime])?)
            };
            Ok(GridMetrics {
                n_prime,
                metrics: fitted.evaluate(&cov, &train_data, &test_data, spec.align_eigenvectors)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TrialMetrics {
        trial,
        nominal,
        per_grid,
    })
}
