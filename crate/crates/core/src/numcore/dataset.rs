//! Datasets: samples-by-features matrices with optional regression targets,
//! plus the CSV interchange format used by the CLI.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::matrix::DenseMatrix;

/// How targets are attached to a feature CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSource {
    /// No targets: every column is a feature.
    None,
    /// The final column of the feature CSV holds the target.
    LastColumn,
    /// A separate single-column CSV holds one target per sample.
    SeparateFile(std::path::PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DenseMatrix,
    targets: Option<Vec<f64>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        features: DenseMatrix,
        targets: Option<Vec<f64>>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("dataset features"));
        }
        if let Some(t) = &targets {
            if t.len() != features.rows() {
                return Err(Error::DimMismatch {
                    expected: features.rows(),
                    found: t.len(),
                    context: "target count",
                });
            }
            if !t.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("dataset targets"));
            }
        }
        if let Some(names) = &feature_names {
            if names.len() != features.cols() {
                return Err(Error::DimMismatch {
                    expected: features.cols(),
                    found: names.len(),
                    context: "feature name count",
                });
            }
        }
        Ok(Dataset {
            features,
            targets,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn targets(&self) -> Option<&[f64]> {
        self.targets.as_deref()
    }

    pub fn require_targets(&self, context: &'static str) -> Result<&[f64]> {
        self.targets
            .as_deref()
            .ok_or(Error::MissingTargets(context))
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// New dataset holding the selected samples, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let m = self.n_features();
        let mut features = DenseMatrix::zeros(indices.len(), m);
        for (dst, &src) in indices.iter().enumerate() {
            features
                .row_mut(dst)
                .copy_from_slice(self.features.row(src));
        }
        let targets = self
            .targets
            .as_ref()
            .map(|t| indices.iter().map(|&i| t[i]).collect());
        Dataset::new(features, targets, self.feature_names.clone())
    }

    /// Features transposed to an m-by-n matrix whose columns are samples.
    pub fn features_transposed(&self) -> DenseMatrix {
        self.features.transpose()
    }

    /// Divides every sample by the largest sample norm so that all samples
    /// satisfy `||x|| <= 1`. Optional preprocessing, off by default.
    pub fn rescaled_to_unit_ball(&self) -> Dataset {
        let max_norm = (0..self.n_samples())
            .map(|i| crate::numcore::matrix::norm2(self.sample(i)))
            .fold(0.0_f64, f64::max);
        if max_norm <= 1.0 {
            return self.clone();
        }
        Dataset {
            features: self.features.scale(1.0 / max_norm),
            targets: self.targets.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Reads a dataset CSV: one sample per row, decimal feature columns,
    /// optional header row, targets per `TargetSource`.
    pub fn read_csv(path: &Path, has_header: bool, target: &TargetSource) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .trim(csv::Trim::All)
            .from_path(path)?;

        let names: Option<Vec<String>> = if has_header {
            Some(reader.headers()?.iter().map(|s| s.to_string()).collect())
        } else {
            None
        };

        let mut rows: Vec<Vec<f64>> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row: std::result::Result<Vec<f64>, _> =
                record.iter().map(|s| s.parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Csv(format!(
                "{}: rows have inconsistent column counts",
                path.display()
            )));
        }

        let (m, targets, names) = match target {
            TargetSource::None => (width, None, names),
            TargetSource::LastColumn => {
                if width < 2 {
                    return Err(Error::Csv(format!(
                        "{}: need at least one feature column besides the target",
                        path.display()
                    )));
                }
                let t: Vec<f64> = rows.iter().map(|r| r[width - 1]).collect();
                let names = names.map(|mut n| {
                    n.truncate(width - 1);
                    n
                });
                (width - 1, Some(t), names)
            }
            TargetSource::SeparateFile(tpath) => {
                let t = read_target_column(tpath, has_header)?;
                (width, Some(t), names)
            }
        };

        let mut data = Vec::with_capacity(rows.len() * m);
        for r in &rows {
            data.extend_from_slice(&r[..m]);
        }
        let features = DenseMatrix::from_vec(rows.len(), m, data)?;
        Dataset::new(features, targets, names)
    }

    /// Writes the dataset as CSV with 17 significant digits per value so a
    /// read-back reproduces every f64 exactly. Targets, when present, go in
    /// a final `target` column.
    pub fn write_csv(&self, path: &Path, with_header: bool) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        if with_header {
            let mut cols: Vec<String> = match &self.feature_names {
                Some(names) => names.clone(),
                None => (0..self.n_features()).map(|j| format!("f{j}")).collect(),
            };
            if self.targets.is_some() {
                cols.push("target".to_string());
            }
            writeln!(out, "{}", cols.join(","))?;
        }
        for i in 0..self.n_samples() {
            let mut fields: Vec<String> = self.sample(i).iter().map(|v| format_f64(*v)).collect();
            if let Some(t) = &self.targets {
                fields.push(format_f64(t[i]));
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn read_target_column(path: &Path, has_header: bool) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 1 {
            return Err(Error::Csv(format!(
                "{}: target file must have exactly one column",
                path.display()
            )));
        }
        out.push(
            record[0]
                .parse::<f64>()
                .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?,
        );
    }
    Ok(out)
}

/// 17 significant digits: enough to round-trip any f64 through decimal.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}
