//! Per-class z-score outlier filter.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::scaler::{column_moments, is_constant_column, StdConvention};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Whether a z-score exactly on the threshold counts as an outlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Remove iff |z| >= threshold.
    Inclusive,
    /// Remove iff |z| > threshold.
    Exclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScoreConfig {
    pub threshold: f64,
    pub std: StdConvention,
    pub boundary: Boundary,
}

impl ZScoreConfig {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    fn is_outlier(&self, z: f64) -> bool {
        match self.boundary {
            Boundary::Inclusive => z.abs() >= self.threshold,
            Boundary::Exclusive => z.abs() > self.threshold,
        }
    }
}

impl Default for ZScoreConfig {
    fn default() -> Self {
        Self {
            threshold: 3.0,
            std: StdConvention::Population,
            boundary: Boundary::Inclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovedRow {
    /// Index into the unfiltered dataset.
    pub index: usize,
    pub class: usize,
    /// Feature with the largest |z| and that z-score.
    pub feature: usize,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierReport {
    /// Ascending by `index`.
    pub removed: Vec<RemovedRow>,
    /// Removed count per class id.
    pub removed_per_class: Vec<usize>,
    pub config: ZScoreConfig,
    pub rows_before: usize,
}

impl OutlierReport {
    pub fn removed_indices(&self) -> Vec<usize> {
        self.removed.iter().map(|r| r.index).collect()
    }

    pub fn rows_after(&self) -> usize {
        self.rows_before - self.removed.len()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, d: &Dataset) -> std::io::Result<()> {
        writeln!(w, "row_index,class,feature,z")?;
        for r in &self.removed {
            writeln!(
                w,
                "{},{},{},{}",
                r.index,
                d.class_name(r.class),
                d.feature_names()[r.feature],
                r.z
            )?;
        }
        Ok(())
    }
}

/// Removes every row with an extreme z-score in any feature, where z-scores
/// use the row's own class mean and standard deviation.
///
/// Statistics come from a single pass over the unfiltered class. A feature
/// that is constant within a class contributes z = 0. Row order is kept.
pub fn zscore_filter(d: &Dataset, config: ZScoreConfig) -> Result<(Dataset, OutlierReport)> {
    if !(config.threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "z threshold must be > 0, got {}",
            config.threshold
        )));
    }
    let mut removed = Vec::new();
    for (class, rows) in d.rows_by_class().into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: d.class_name(class).to_string(),
                count: rows.len(),
                required: 2,
            });
        }
        let x = d.features().select_rows(&rows);
        let (means, stds) = column_moments(&x, config.std);
        let constant: Vec<bool> = (0..x.cols())
            .map(|j| stds[j] == 0.0 || is_constant_column(&x, j))
            .collect();
        for (local, &index) in rows.iter().enumerate() {
            let mut worst: Option<(usize, f64)> = None;
            for (j, &v) in x.row(local).iter().enumerate() {
                let z = if constant[j] { 0.0 } else { (v - means[j]) / stds[j] };
                if worst.is_none_or(|(_, w)| z.abs() > w.abs()) {
                    worst = Some((j, z));
                }
            }
            let (feature, z) = worst.expect("at least one feature");
            if config.is_outlier(z) {
                removed.push(RemovedRow {
                    index,
                    class,
                    feature,
                    z,
                });
            }
        }
    }
    removed.sort_by_key(|r| r.index);

    let mut removed_per_class = vec![0; d.n_classes()];
    for r in &removed {
        removed_per_class[r.class] += 1;
    }
    let mut drop = vec![false; d.n_rows()];
    for r in &removed {
        drop[r.index] = true;
    }
    let keep: Vec<usize> = (0..d.n_rows()).filter(|&i| !drop[i]).collect();
    if keep.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let report = OutlierReport {
        removed,
        removed_per_class,
        config,
        rows_before: d.n_rows(),
    };
    Ok((d.select_rows(&keep), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn one_class(values: &[f64]) -> Dataset {
        let x = Matrix::new(values.len(), 1, values.to_vec()).unwrap();
        Dataset::new(x, vec![0; values.len()], vec!["f".into()], vec!["A".into()]).unwrap()
    }

    #[test]
    fn ten_point_boundary_case() {
        // mean 10, population std 30, so the 100 sits at exactly z = 3.
        let mut v = vec![0.0; 9];
        v.push(100.0);
        let d = one_class(&v);
        let (kept, report) = zscore_filter(&d, ZScoreConfig::new(3.0)).unwrap();
        assert_eq!(report.removed_indices(), vec![9]);
        assert_eq!(report.removed[0].z, 3.0);
        assert_eq!(kept.n_rows(), 9);

        let strict = ZScoreConfig {
            boundary: Boundary::Exclusive,
            ..ZScoreConfig::new(3.0)
        };
        assert!(zscore_filter(&d, strict).unwrap().1.removed.is_empty());

        let sample = ZScoreConfig {
            std: StdConvention::Sample,
            ..ZScoreConfig::new(3.0)
        };
        assert!(zscore_filter(&d, sample).unwrap().1.removed.is_empty());
    }

    #[test]
    fn identical_rows_never_removed() {
        let d = one_class(&[4.2; 6]);
        let (kept, report) = zscore_filter(&d, ZScoreConfig::new(0.5)).unwrap();
        assert_eq!(kept.n_rows(), 6);
        assert!(report.removed.is_empty());
    }

    #[test]
    fn statistics_are_per_class() {
        // Row 3 is extreme for class B but unremarkable next to class A.
        let x = Matrix::new(
            14,
            1,
            vec![
                100.0, 101.0, 99.0, 50.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0,
            ],
        )
        .unwrap();
        let labels = vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let d = Dataset::new(x, labels, vec!["f".into()], vec!["A".into(), "B".into()]).unwrap();
        let (kept, report) = zscore_filter(&d, ZScoreConfig::new(3.0)).unwrap();
        assert_eq!(report.removed_indices(), vec![3]);
        assert_eq!(report.removed_per_class, vec![0, 1]);
        assert_eq!(kept.labels(), &[0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn rejects_singleton_class_and_bad_threshold() {
        let x = Matrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let d = Dataset::new(x, vec![0, 0, 1], vec!["f".into()], vec!["A".into(), "B".into()]).unwrap();
        assert!(matches!(
            zscore_filter(&d, ZScoreConfig::new(3.0)),
            Err(Error::ClassTooSmall { .. })
        ));
        assert!(zscore_filter(&one_class(&[1.0, 2.0]), ZScoreConfig::new(0.0)).is_err());
    }

    #[test]
    fn infinite_threshold_keeps_everything() {
        let d = one_class(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1e6]);
        let (kept, _) = zscore_filter(&d, ZScoreConfig::new(f64::INFINITY)).unwrap();
        assert_eq!(kept.n_rows(), 10);
    }
}
