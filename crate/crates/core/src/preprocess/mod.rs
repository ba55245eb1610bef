//! Fitted transforms: standard scaling, per-class z-score filtering and PCA,
//! plus the chain that applies them in order.

mod pca;
mod scaler;
mod zscore;

pub use pca::{pca_fit, PcaModel, PcaTarget};
pub use scaler::{ScalerParams, StdConvention};
pub use zscore::{zscore_filter, Boundary, OutlierReport, RemovedRow, ZScoreConfig};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Result;

/// Which preprocessing steps to fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub zscore: Option<ZScoreConfig>,
    pub pca: Option<PcaTarget>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            zscore: Some(ZScoreConfig::default()),
            pca: Some(PcaTarget::VarianceRatio(0.9999)),
        }
    }
}

/// Scaler and optional PCA fitted on one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPreprocess {
    pub scaler: ScalerParams,
    pub pca: Option<PcaModel>,
}

/// Output of [`fit_preprocess`].
#[derive(Debug, Clone)]
pub struct PreprocessOutcome {
    pub fitted: FittedPreprocess,
    /// The filtered, transformed training rows.
    pub train: Dataset,
    /// Indices (into the input) of the rows that survived filtering.
    pub kept_rows: Vec<usize>,
    pub outliers: Option<OutlierReport>,
}

/// Fits the chain on `train`: the scaler is fitted on all input rows, the
/// z-filter runs on the raw values (per-class z-scores are invariant under
/// the scaler), the survivors are scaled and PCA is fitted on them.
pub fn fit_preprocess(train: &Dataset, config: &PreprocessConfig) -> Result<PreprocessOutcome> {
    let scaler = ScalerParams::fit_named(train.features(), train.feature_names())?;
    let (filtered, kept_rows, outliers) = match config.zscore {
        Some(z) => {
            let (filtered, report) = zscore_filter(train, z)?;
            let removed = report.removed_indices();
            let kept = (0..train.n_rows())
                .filter(|i| removed.binary_search(i).is_err())
                .collect();
            (filtered, kept, Some(report))
        }
        None => (train.clone(), (0..train.n_rows()).collect(), None),
    };
    let scaled = scaler.apply(filtered.features())?;
    let (pca, features, names) = match config.pca {
        Some(target) => {
            let model = pca_fit(&scaled, target)?;
            let scores = model.transform(&scaled)?;
            let names = component_names(model.n_components());
            (Some(model), scores, names)
        }
        None => (None, scaled, train.feature_names().to_vec()),
    };
    let fitted = FittedPreprocess { scaler, pca };
    Ok(PreprocessOutcome {
        train: filtered.with_features(features, names)?,
        fitted,
        kept_rows,
        outliers,
    })
}

impl FittedPreprocess {
    /// Scales and projects every row; no filtering.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let scaled = self.scaler.apply(d.features())?;
        match &self.pca {
            Some(model) => {
                let scores = model.transform(&scaled)?;
                d.with_features(scores, component_names(model.n_components()))
            }
            None => d.with_features(scaled, d.feature_names().to_vec()),
        }
    }
}

pub fn component_names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("PC{i}")).collect()
}
