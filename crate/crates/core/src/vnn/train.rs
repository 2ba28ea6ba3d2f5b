//! Mini-batch training with Adam or plain SGD against the squared error of
//! the scalar readout. The returned model is the parameter snapshot with
//! the best validation MSE; a run is fully determined by its config seed.

use serde::{Deserialize, Serialize};

use crate::datagen::rng::SeededRng;
use crate::error::{Error, Result};
use crate::numcore::{CovarianceModel, Dataset, DenseMatrix};
use crate::vnn::forward::vnn_forward_batch;
use crate::vnn::{vnn_backward_batch, VnnModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarlyMetric {
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    pub early_metric: EarlyMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            learning_rate: 0.01,
            optimizer: Optimizer::Adam,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            seed: 0,
            validation_fraction: 0.1,
            early_metric: EarlyMetric::Mse,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch_size must be at least 1".into(),
            ));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidParameter(
                "learning_rate must be finite and nonnegative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidParameter(
                "validation_fraction must lie in [0, 1)".into(),
            ));
        }
        let (b1, b2) = self.adam_betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) || self.adam_eps <= 0.0 {
            return Err(Error::InvalidParameter("invalid Adam constants".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_metric: f64,
}

struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

/// Trains a copy of `model_init` on the dataset's train split and returns
/// the snapshot with the lowest validation MSE together with the per-epoch
/// trace. With an empty validation split the train MSE selects instead.
pub fn train(
    model_init: &VnnModel,
    cov: &CovarianceModel,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(VnnModel, TrainTrace)> {
    cfg.validate()?;
    let targets = data.require_targets("vnn training")?.to_vec();
    let n = data.n_samples();
    let columns = data.features_transposed();

    let mut split_rng = SeededRng::with_stream(cfg.seed, 0);
    let perm = split_rng.permutation(n);
    let val_n = (cfg.validation_fraction * n as f64).floor() as usize;
    let train_idx: Vec<usize> = perm[..n - val_n].to_vec();
    let val_idx: Vec<usize> = perm[n - val_n..].to_vec();
    if train_idx.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let val_columns = gather_columns(&columns, &val_idx);
    let val_targets: Vec<f64> = val_idx.iter().map(|&i| targets[i]).collect();

    let mut model = model_init.clone();
    let mut adam = AdamState {
        m: model
            .layers()
            .iter()
            .map(|l| vec![0.0; l.taps().len()])
            .collect(),
        v: model
            .layers()
            .iter()
            .map(|l| vec![0.0; l.taps().len()])
            .collect(),
        step: 0,
    };

    let mut best_model = model.clone();
    let mut best_metric = f64::INFINITY;
    let mut best_epoch = 0;
    let mut trace = Vec::with_capacity(cfg.epochs);

    let mut order = train_idx.clone();
    for epoch in 1..=cfg.epochs {
        let mut epoch_rng = SeededRng::with_stream(cfg.seed, epoch as u64);
        epoch_rng.shuffle(&mut order);

        let mut sq_err_sum = 0.0;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = gather_columns(&columns, chunk);
            let (preds, cache) = vnn_forward_batch(&model, cov, &batch)?;
            let b = chunk.len() as f64;
            let mut loss_grads = Vec::with_capacity(chunk.len());
            let mut batch_sq = 0.0;
            for (s, &idx) in chunk.iter().enumerate() {
                let r = preds[s] - targets[idx];
                batch_sq += r * r;
                loss_grads.push(2.0 * r / b);
            }
            if !batch_sq.is_finite() {
                return Err(Error::NanLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            sq_err_sum += batch_sq;

            let grads = vnn_backward_batch(&model, cov, &cache, &loss_grads)?;
            apply_update(&mut model, &grads, cfg, &mut adam);
        }
        let train_mse = sq_err_sum / order.len() as f64;

        let val_mse = if val_idx.is_empty() {
            None
        } else {
            let (preds, _) = vnn_forward_batch(&model, cov, &val_columns)?;
            Some(
                preds
                    .iter()
                    .zip(val_targets.iter())
                    .map(|(p, t)| (p - t) * (p - t))
                    .sum::<f64>()
                    / val_targets.len() as f64,
            )
        };

        let metric = val_mse.unwrap_or(train_mse);
        if !metric.is_finite() {
            return Err(Error::NanLoss { epoch, batch: 0 });
        }
        if metric < best_metric {
            best_metric = metric;
            best_model = model.clone();
            best_epoch = epoch;
        }
        trace.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
        });
    }

    Ok((
        best_model,
        TrainTrace {
            epochs: trace,
            best_epoch,
            best_metric,
        },
    ))
}

fn apply_update(model: &mut VnnModel, grads: &[Vec<f64>], cfg: &TrainConfig, adam: &mut AdamState) {
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (layer, g) in model.layers_mut().iter_mut().zip(grads.iter()) {
                for (t, &gi) in layer.taps_mut().iter_mut().zip(g.iter()) {
                    *t -= cfg.learning_rate * gi;
                }
            }
        }
        Optimizer::Adam => {
            adam.step += 1;
            let (b1, b2) = cfg.adam_betas;
            let corr1 = 1.0 - b1.powi(adam.step as i32);
            let corr2 = 1.0 - b2.powi(adam.step as i32);
            for ((layer, g), (m, v)) in model
                .layers_mut()
                .iter_mut()
                .zip(grads.iter())
                .zip(adam.m.iter_mut().zip(adam.v.iter_mut()))
            {
                for (((t, &gi), mi), vi) in layer
                    .taps_mut()
                    .iter_mut()
                    .zip(g.iter())
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *mi = b1 * *mi + (1.0 - b1) * gi;
                    *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                    let m_hat = *mi / corr1;
                    let v_hat = *vi / corr2;
                    *t -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
                }
            }
        }
    }
}

fn gather_columns(columns: &DenseMatrix, indices: &[usize]) -> DenseMatrix {
    let m = columns.rows();
    let mut out = DenseMatrix::zeros(m, indices.len());
    for i in 0..m {
        let src = columns.row(i);
        let dst = out.row_mut(i);
        for (d, &idx) in dst.iter_mut().zip(indices.iter()) {
            *d = src[idx];
        }
    }
    out
}
