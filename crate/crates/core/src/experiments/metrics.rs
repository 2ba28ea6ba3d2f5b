//! Scalar evaluation metrics and the small statistics helpers the report
//! aggregation uses.

use crate::error::{Error, Result};

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::DimMismatch {
            expected: truth.len(),
            found: pred.len(),
            context: "mae inputs",
        });
    }
    Ok(pred
        .iter()
        .zip(truth.iter())
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Pearson correlation, two-pass. Errors on fewer than two points or
/// zero variance on either side.
pub fn pearson(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.len() < 2 {
        return Err(Error::DimMismatch {
            expected: truth.len().max(2),
            found: pred.len(),
            context: "pearson inputs",
        });
    }
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mt = truth.iter().sum::<f64>() / n;
    let mut spt = 0.0;
    let mut spp = 0.0;
    let mut stt = 0.0;
    for (p, t) in pred.iter().zip(truth.iter()) {
        let dp = p - mp;
        let dt = t - mt;
        spt += dp * dt;
        spp += dp * dp;
        stt += dt * dt;
    }
    if spp <= 0.0 || stt <= 0.0 {
        return Err(Error::DegenerateSpectrum(
            "pearson correlation needs nonzero variance on both sides",
        ));
    }
    Ok((spt / (spp.sqrt() * stt.sqrt())).clamp(-1.0, 1.0))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two
/// values.
pub fn sample_std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values);
    (values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Median (average of the middle two for even counts).
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
