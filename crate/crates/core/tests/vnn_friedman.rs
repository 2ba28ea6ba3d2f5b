//! Trained-model quality on the Friedman #1 benchmark: the network must
//! beat the constant-mean predictor on held-out data.

use covnet::datagen::gen_friedman1;
use covnet::datagen::rng::SeededRng;
use covnet::experiments::mae;
use covnet::sample_covariance;
use covnet::vnn::{train, Activation, BoundVnn, Optimizer, TrainConfig, VnnArch, VnnModel};

#[test]
fn friedman_vnn_beats_constant_mean_predictor() {
    let data = gen_friedman1(1000, 100, 1.0, 555).unwrap();
    let mut rng = SeededRng::new(4242);
    let perm = rng.permutation(1000);
    let train_data = data.subset(&perm[..900]).unwrap();
    let test_data = data.subset(&perm[900..]).unwrap();

    let cov = sample_covariance(&train_data);
    let arch = VnnArch {
        layers: 2,
        channels: 13,
        taps_per_filter: 2,
        activation: Activation::Relu,
        final_activation: None,
    };
    let init = VnnModel::from_arch(&arch, 77).unwrap();
    let cfg = TrainConfig {
        epochs: 100,
        batch_size: 32,
        learning_rate: 0.0151,
        optimizer: Optimizer::Adam,
        validation_fraction: 0.1,
        seed: 909,
        ..TrainConfig::default()
    };
    let (model, trace) = train(&init, &cov, &train_data, &cfg).unwrap();
    assert!(trace.best_metric.is_finite());

    let bound = BoundVnn::bind(model, cov);
    let preds = bound.predict_dataset(&test_data).unwrap();
    let truth = test_data.targets().unwrap();

    let train_targets = train_data.targets().unwrap();
    let train_mean = train_targets.iter().sum::<f64>() / train_targets.len() as f64;
    let constant: Vec<f64> = vec![train_mean; truth.len()];

    let vnn_mae = mae(&preds, truth).unwrap();
    let constant_mae = mae(&constant, truth).unwrap();
    assert!(
        vnn_mae < constant_mae,
        "vnn {vnn_mae:.4} vs constant-mean {constant_mae:.4}"
    );
}
