//! Fixture builders shared by the benchmarks.

use covnet::datagen::{gen_gaussian_ensemble, EnsembleSpec};
use covnet::vnn::{Activation, VnnArch, VnnModel};
use covnet::{sample_covariance, CovarianceModel, Dataset, DenseMatrix};

pub fn bench_covariance(m: usize, seed: u64) -> CovarianceModel {
    let spectrum: Vec<f64> = (0..m).map(|i| 2.0 / (1.0 + i as f64)).collect();
    let spec = EnsembleSpec::new(m, spectrum, seed).unwrap();
    let (data, _) = gen_gaussian_ensemble(&spec, 3 * m, seed + 1).unwrap();
    sample_covariance(&data)
}

pub fn bench_dataset(n: usize, m: usize, seed: u64) -> Dataset {
    covnet::datagen::gen_friedman1(n, m.max(5), 1.0, seed).unwrap()
}

pub fn bench_vector(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = covnet::datagen::rng::SeededRng::new(seed);
    (0..m).map(|_| rng.normal()).collect()
}

pub fn bench_batch(m: usize, b: usize, seed: u64) -> DenseMatrix {
    let mut rng = covnet::datagen::rng::SeededRng::new(seed);
    DenseMatrix::from_fn(m, b, |_, _| rng.normal())
}

pub fn bench_model(channels: usize, taps: usize, seed: u64) -> VnnModel {
    let arch = VnnArch {
        layers: 2,
        channels,
        taps_per_filter: taps,
        activation: Activation::Relu,
        final_activation: None,
    };
    VnnModel::from_arch(&arch, seed).unwrap()
}
