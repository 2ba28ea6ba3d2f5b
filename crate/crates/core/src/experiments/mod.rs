//! Experiment harnesses and their structured reports.
//!
//! Every harness is a pure function of `(config, seed)`: trials own derived
//! seed streams, parallel trials are reduced in trial order, and reports
//! serialize to JSON whose numbers round-trip exactly, so a repeated run
//! reproduces a report bit-for-bit.

pub mod lipschitz;
pub mod metrics;
pub mod scaling;
pub mod stability;
pub mod transfer;

pub use lipschitz::{lipschitz_check, LipschitzCase, LipschitzReport};
pub use metrics::{mae, mean, median, pearson, sample_std_dev};
pub use scaling::{scaling_law_experiment, ScalingReport, ScalingSpec};
pub use stability::{stability_experiment, ModelFamily, StabilityReport, StabilityRunSpec};
pub use transfer::{transfer_experiment, TransferCell, TransferReport, TransferSpec};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Metrics recorded on the fixed train and test splits of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae_train: f64,
    pub mae_test: f64,
    pub pearson_train: f64,
    pub pearson_test: f64,
}

impl MetricSet {
    pub fn get(&self, which: Metric) -> f64 {
        match which {
            Metric::MaeTrain => self.mae_train,
            Metric::MaeTest => self.mae_test,
            Metric::PearsonTrain => self.pearson_train,
            Metric::PearsonTest => self.pearson_test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MaeTrain,
    MaeTest,
    PearsonTrain,
    PearsonTest,
}

/// Mean, sample standard deviation, and standard error of the mean for each
/// metric across trials. Both dispersion measures are emitted so either can
/// be used as the error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: MetricSet,
    pub sd: MetricSet,
    pub sem: MetricSet,
}

pub(crate) fn aggregate_metric_sets(sets: &[MetricSet]) -> MetricAggregate {
    let collect = |f: fn(&MetricSet) -> f64| -> Vec<f64> { sets.iter().map(f).collect() };
    let agg = |values: &[f64]| {
        let mu = metrics::mean(values);
        let sd = metrics::sample_std_dev(values);
        (mu, sd, sd / (values.len() as f64).sqrt())
    };
    let (m1, s1, e1) = agg(&collect(|m| m.mae_train));
    let (m2, s2, e2) = agg(&collect(|m| m.mae_test));
    let (m3, s3, e3) = agg(&collect(|m| m.pearson_train));
    let (m4, s4, e4) = agg(&collect(|m| m.pearson_test));
    MetricAggregate {
        mean: MetricSet {
            mae_train: m1,
            mae_test: m2,
            pearson_train: m3,
            pearson_test: m4,
        },
        sd: MetricSet {
            mae_train: s1,
            mae_test: s2,
            pearson_train: s3,
            pearson_test: s4,
        },
        sem: MetricSet {
            mae_train: e1,
            mae_test: e2,
            pearson_train: e3,
            pearson_test: e4,
        },
    }
}

/// Seed plus a digest of the full config: enough to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn new<T: Serialize>(seed: u64, config: &T) -> Self {
        Provenance {
            seed,
            config_hash: config_hash(config),
        }
    }
}

/// SHA-256 of the config's canonical JSON encoding, hex-encoded.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serialization");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
