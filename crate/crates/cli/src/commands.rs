//! Subcommand implementations: thin glue from config files to the library
//! entry points, plus output and manifest writing.

use std::path::Path;

use covnet::baseline::{
    cv_select_components, default_component_candidates, default_rbf_gamma, fit_pca_linear,
    fit_pca_rbf, BaselineKernel, PcaRegressor,
};
use covnet::datagen::rng::{derive_seed, SeededRng};
use covnet::datagen::{gen_friedman1, gen_gaussian_ensemble, gen_lowrank_regression, gen_multires};
use covnet::experiments::{
    lipschitz_check, scaling_law_experiment, stability_experiment, transfer_experiment,
};
use covnet::vnn::{self, rescale_filter_responses, train, BoundVnn, VnnModel};
use covnet::{
    format_f64, pca_scores_via_filterbank, sample_covariance, vft, CovarianceModel, Dataset,
    PcaFilterbank,
};

use crate::config::*;
use crate::error::CliError;
use crate::manifest::ManifestBuilder;

fn covariance_for(data: &Dataset, scale: CovScale) -> Result<CovarianceModel, CliError> {
    let cov = sample_covariance(data);
    Ok(match scale {
        CovScale::None => cov,
        CovScale::Spectral => cov.spectral_normalized()?,
    })
}

pub fn datagen(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: DatagenConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut manifest = ManifestBuilder::new("datagen", cfg.seed, &cfg, out)?;

    match &cfg.generator {
        GeneratorSpec::Friedman1 { n, m, noise_sd } => {
            let data = gen_friedman1(*n, *m, *noise_sd, cfg.seed)?;
            write_dataset(&mut manifest, "data.csv", &data, cfg.with_header)?;
        }
        GeneratorSpec::Lowrank {
            n,
            m,
            n_informative,
            effective_rank,
            tail_strength,
            noise_sd,
        } => {
            let data = gen_lowrank_regression(
                *n,
                *m,
                *n_informative,
                *effective_rank,
                *tail_strength,
                *noise_sd,
                cfg.seed,
            )?;
            write_dataset(&mut manifest, "data.csv", &data, cfg.with_header)?;
        }
        GeneratorSpec::GaussianEnsemble { ensemble, n } => {
            let (data, cov) = gen_gaussian_ensemble(ensemble, *n, cfg.seed)?;
            write_dataset(&mut manifest, "data.csv", &data, cfg.with_header)?;
            let mut lines = String::new();
            for i in 0..cov.dim() {
                let row: Vec<String> = cov.matrix().row(i).iter().map(|v| format_f64(*v)).collect();
                lines.push_str(&row.join(","));
                lines.push('\n');
            }
            manifest.write_output("ensemble_covariance.csv", &lines)?;
        }
        GeneratorSpec::Multires { spec } => {
            let mut spec = spec.clone();
            spec.seed = cfg.seed;
            for (resolution, data) in gen_multires(&spec)? {
                write_dataset(
                    &mut manifest,
                    &format!("data_res{resolution}.csv"),
                    &data,
                    cfg.with_header,
                )?;
            }
        }
    }
    manifest.finish()
}

fn write_dataset(
    manifest: &mut ManifestBuilder,
    name: &str,
    data: &Dataset,
    with_header: bool,
) -> Result<(), CliError> {
    let path = manifest.out_dir().join(name);
    data.write_csv(&path, with_header)?;
    manifest.record_output(path);
    Ok(())
}

pub fn fit(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    target_col: Option<&str>,
    cov_scale: Option<CovScale>,
) -> Result<(), CliError> {
    let mut cfg: FitConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.data.apply_target_flag(target_col);
    if let Some(scale) = cov_scale {
        cfg.cov_scale = scale;
    }
    let mut manifest = ManifestBuilder::new("fit", cfg.seed, &cfg, out)?;

    let data = cfg.data.load()?;
    let cov = covariance_for(&data, cfg.cov_scale)?;
    let init = VnnModel::from_arch(&cfg.arch, derive_seed(cfg.seed, 1))?;
    let train_cfg = cfg.train.to_train_config(derive_seed(cfg.seed, 2));
    let (model, trace) = train(&init, &cov, &data, &train_cfg)?;

    manifest.write_output("model.json", &vnn::serialize(&model))?;
    let mut trace_csv = String::from("epoch,train_mse,val_mse\n");
    for e in &trace.epochs {
        trace_csv.push_str(&format!(
            "{},{},{}\n",
            e.epoch,
            format_f64(e.train_mse),
            e.val_mse.map(format_f64).unwrap_or_default()
        ));
    }
    manifest.write_output("trace.csv", &trace_csv)?;
    manifest.finish()
}

pub fn predict(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    target_col: Option<&str>,
    cov_scale: Option<CovScale>,
) -> Result<(), CliError> {
    let mut cfg: PredictConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.data.apply_target_flag(target_col);
    if let Some(scale) = cov_scale {
        cfg.cov_scale = scale;
    }
    let mut manifest = ManifestBuilder::new("predict", cfg.seed, &cfg, out)?;

    let data = cfg.data.load()?;
    let blob = std::fs::read_to_string(&cfg.model_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.model_path.display())))?;
    let model = vnn::deserialize(&blob)?;
    let cov_source = match &cfg.cov_data {
        Some(source) => source.load()?,
        None => data.clone(),
    };
    let cov = covariance_for(&cov_source, cfg.cov_scale)?;
    let preds = BoundVnn::bind(model, cov).predict_dataset(&data)?;

    manifest.write_output("predictions.csv", &prediction_csv(&preds))?;
    manifest.finish()
}

fn prediction_csv(preds: &[f64]) -> String {
    let mut text = String::from("prediction\n");
    for p in preds {
        text.push_str(&format_f64(*p));
        text.push('\n');
    }
    text
}

pub fn pca(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    target_col: Option<&str>,
    oracle: bool,
) -> Result<(), CliError> {
    let mut cfg: PcaConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.data.apply_target_flag(target_col);
    let mut manifest = ManifestBuilder::new("pca", cfg.seed, &cfg, out)?;

    let data = cfg.data.load()?;
    let cov = sample_covariance(&data);
    let m = cov.dim();
    let c = cfg.components.unwrap_or(m);
    if c == 0 || c > m {
        return Err(CliError::Config(format!(
            "components {c} out of range 1..={m}"
        )));
    }
    let eigen = cov.eigen()?.clone();
    let bank = match &cfg.gains {
        Some(gains) => PcaFilterbank::new(eigen.clone(), gains.clone())?,
        None => PcaFilterbank::unit(eigen.clone()),
    };

    let mut scores_csv = String::new();
    scores_csv.push_str(
        &(0..c)
            .map(|i| format!("score{i}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    scores_csv.push('\n');
    let mut max_discrepancy = 0.0_f64;
    for i in 0..data.n_samples() {
        let scores = pca_scores_via_filterbank(&bank, data.sample(i))?;
        if oracle {
            let direct = vft(&eigen, data.sample(i))?;
            for (s, d) in scores.iter().zip(direct.iter()) {
                max_discrepancy = max_discrepancy.max((s - d).abs());
            }
        }
        let row: Vec<String> = scores[..c].iter().map(|v| format_f64(*v)).collect();
        scores_csv.push_str(&row.join(","));
        scores_csv.push('\n');
    }
    manifest.write_output("scores.csv", &scores_csv)?;
    manifest.finish()?;

    if oracle {
        println!("max filterbank-vs-eigendecomposition discrepancy: {max_discrepancy:.3e}");
        if max_discrepancy > 1e-6 {
            return Err(CliError::Run(covnet::Error::InvalidParameter(format!(
                "filterbank discrepancy {max_discrepancy:e} exceeds 1e-6"
            ))));
        }
    }
    Ok(())
}

pub fn baseline(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    target_col: Option<&str>,
) -> Result<(), CliError> {
    let mut cfg: BaselineConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.data.apply_target_flag(target_col);
    let mut manifest = ManifestBuilder::new("baseline", cfg.seed, &cfg, out)?;

    let data = cfg.data.load()?;
    let cov = sample_covariance(&data);
    let eigen = cov.eigen()?;

    let c = match cfg.components {
        Some(c) => c,
        None => {
            let candidates = cfg.candidates.clone().unwrap_or_else(|| {
                default_component_candidates(data.n_features(), data.n_samples())
            });
            cv_select_components(&data, eigen, &candidates, cfg.kernel, cfg.seed)?
        }
    };

    let (reg, gamma_used): (PcaRegressor, Option<f64>) = match cfg.kernel {
        BaselineKernel::Linear => (fit_pca_linear(&data, eigen, c)?, None),
        BaselineKernel::Rbf => {
            let gamma = match cfg.gamma {
                Some(g) => g,
                None => default_rbf_gamma(&data, eigen, c)?,
            };
            (
                fit_pca_rbf(&data, eigen, c, gamma, cfg.lambda)?,
                Some(gamma),
            )
        }
    };

    let eval = match &cfg.eval_data {
        Some(source) => source.load()?,
        None => data.clone(),
    };
    let preds = reg.predict_dataset(&eval)?;

    manifest.write_output(
        "baseline_model.json",
        &serde_json::to_string_pretty(&reg).map_err(|e| CliError::Config(e.to_string()))?,
    )?;
    manifest.write_output("predictions.csv", &prediction_csv(&preds))?;
    manifest.write_output(
        "selection.json",
        &serde_json::to_string_pretty(&serde_json::json!({
            "kernel": cfg.kernel,
            "selected_components": c,
            "gamma": gamma_used,
            "lambda": cfg.lambda,
        }))
        .map_err(|e| CliError::Config(e.to_string()))?,
    )?;
    manifest.finish()
}

pub fn stability(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    target_col: Option<&str>,
) -> Result<(), CliError> {
    let mut cfg: StabilityConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.spec.seed = s;
    }
    cfg.data.apply_target_flag(target_col);
    let mut manifest = ManifestBuilder::new("stability", cfg.spec.seed, &cfg, out)?;

    let data = cfg.data.load()?;
    let report = stability_experiment(&data, &cfg.spec)?;
    manifest.write_output(
        "report.json",
        &serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?,
    )?;
    manifest.write_output("stability.csv", &report.to_tidy_csv())?;
    manifest.finish()
}

pub fn scaling(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: ScalingConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.spec.seed = s;
    }
    let mut manifest = ManifestBuilder::new("scaling", cfg.spec.seed, &cfg, out)?;
    let report = scaling_law_experiment(&cfg.spec)?;
    manifest.write_output(
        "report.json",
        &serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?,
    )?;
    manifest.write_output("scaling.csv", &report.to_tidy_csv())?;
    manifest.finish()
}

pub fn lipschitz(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: LipschitzConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut manifest = ManifestBuilder::new("lipschitz", cfg.seed, &cfg, out)?;

    let (data, ensemble_cov) =
        gen_gaussian_ensemble(&cfg.ensemble, cfg.sample_n, derive_seed(cfg.seed, 1))?;
    let sample_cov = sample_covariance(&data);
    let raw = VnnModel::from_arch(&cfg.arch, derive_seed(cfg.seed, 2))?;
    let mut union = sample_cov.eigen()?.eigenvalues().to_vec();
    union.extend_from_slice(ensemble_cov.eigen()?.eigenvalues());
    let model = rescale_filter_responses(&raw, &union);

    let mut rng = SeededRng::new(derive_seed(cfg.seed, 3));
    let m = cfg.ensemble.dim;
    let inputs: Vec<Vec<f64>> = (0..cfg.n_inputs)
        .map(|_| (0..m).map(|_| rng.normal()).collect())
        .collect();
    let report = lipschitz_check(&model, &sample_cov, &ensemble_cov, &inputs)?;

    manifest.write_output(
        "report.json",
        &serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?,
    )?;
    let mut csv = String::from("case,lhs,rhs,readout_diff,pass\n");
    for (i, case) in report.cases.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            format_f64(case.lhs),
            format_f64(case.rhs),
            format_f64(case.readout_diff),
            case.pass
        ));
    }
    manifest.write_output("lipschitz.csv", &csv)?;
    manifest.finish()
}

pub fn transfer(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: TransferConfig = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.spec.seed = s;
    }
    let mut manifest = ManifestBuilder::new("transfer", cfg.spec.seed, &cfg, out)?;

    let datasets: Vec<(usize, Dataset)> = match &cfg.data {
        TransferData::Generate { multires } => gen_multires(multires)?,
        TransferData::Files { datasets } => datasets
            .iter()
            .map(|r| Ok((r.resolution, r.source.load()?)))
            .collect::<Result<Vec<_>, CliError>>()?,
    };
    let report = transfer_experiment(&datasets, &cfg.spec)?;

    manifest.write_output(
        "report.json",
        &serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?,
    )?;
    manifest.write_output("transfer.csv", &report.to_tidy_csv())?;
    manifest.finish()
}
