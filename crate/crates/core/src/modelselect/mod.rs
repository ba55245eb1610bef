//! Stratified folds, grid search and nested cross-validation.

mod folds;
mod grid;
mod metrics;

pub use folds::{stratified_kfold, FoldPlan};
pub use grid::{Candidate, ParamGrid, ParamValue, GBT_GRID, SVM_GRID};
pub use metrics::{evaluate, ClassMetrics, ConfusionMatrix, Metrics};

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gbt::{gbt_train, GbtHyper, GbtModel};
use crate::linalg::Matrix;
use crate::preprocess::{fit_preprocess, FittedPreprocess, OutlierReport, PcaTarget, PreprocessConfig};
use crate::rng::child_seed;
use crate::svm::{svm_train, GammaMode, KernelKind, KernelSpec, SvmHyper, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Svm,
    Gbt,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Gbt => "gbt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "svm" => Some(ModelKind::Svm),
            "gbt" => Some(ModelKind::Gbt),
            _ => None,
        }
    }

    pub fn default_grid(self) -> ParamGrid {
        let text = match self {
            ModelKind::Svm => SVM_GRID,
            ModelKind::Gbt => GBT_GRID,
        };
        ParamGrid::parse(text).expect("built-in grid parses")
    }
}

/// Where preprocessing is fitted relative to the cross-validation splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineMode {
    /// Filter, scaler and PCA fitted once on the whole dataset before splitting.
    PaperFaithful,
    /// Everything fitted on each training split; test rows are never filtered.
    LeakageFree,
}

impl PipelineMode {
    pub fn name(self) -> &'static str {
        match self {
            PipelineMode::PaperFaithful => "paper-faithful",
            PipelineMode::LeakageFree => "leakage-free",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper-faithful" => Some(PipelineMode::PaperFaithful),
            "leakage-free" => Some(PipelineMode::LeakageFree),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub kind: ModelKind,
    pub mode: PipelineMode,
    pub outer_k: usize,
    pub inner_k: usize,
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    /// Non-grid SVM settings (tolerance, pass budget, cache).
    pub svm_base: SvmHyper,
    /// Non-grid boosting settings (lambda, min child weight, seed).
    pub gbt_base: GbtHyper,
}

impl CvConfig {
    pub fn new(kind: ModelKind, mode: PipelineMode, seed: u64) -> Self {
        Self {
            kind,
            mode,
            outer_k: 5,
            inner_k: 3,
            seed,
            preprocess: PreprocessConfig::default(),
            svm_base: SvmHyper::new(1.0, KernelSpec::rbf(GammaMode::Scale)),
            gbt_base: GbtHyper {
                seed,
                ..GbtHyper::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Svm(SvmHyper),
    Gbt(GbtHyper),
}

/// A grid candidate resolved into concrete settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Number of principal components fed to the model, if pinned.
    pub n_components: Option<usize>,
    pub params: ModelParams,
}

fn axis_error(name: &str, value: &ParamValue) -> Error {
    Error::InvalidArgument(format!("invalid value `{value}` for grid axis `{name}`"))
}

pub fn model_spec(cand: &Candidate, cfg: &CvConfig) -> Result<ModelSpec> {
    let mut n_components = None;
    let params = match cfg.kind {
        ModelKind::Svm => {
            let mut h = cfg.svm_base;
            for (name, v) in &cand.values {
                match name.as_str() {
                    "n_components" => n_components = Some(v.as_usize().ok_or_else(|| axis_error(name, v))?),
                    "C" => h.c = v.as_f64().ok_or_else(|| axis_error(name, v))?,
                    "kernel" => {
                        h.kernel.kind = match v {
                            ParamValue::Text(t) => KernelKind::parse(t),
                            _ => None,
                        }
                        .ok_or_else(|| axis_error(name, v))?
                    }
                    "gamma" => {
                        h.kernel.gamma = match v {
                            ParamValue::Num(g) => Some(GammaMode::Fixed(*g)),
                            ParamValue::Text(t) => GammaMode::parse(t),
                        }
                        .ok_or_else(|| axis_error(name, v))?
                    }
                    "degree" => {
                        h.kernel.degree = v
                            .as_usize()
                            .and_then(|d| u32::try_from(d).ok())
                            .ok_or_else(|| axis_error(name, v))?
                    }
                    "coef0" => h.kernel.coef0 = v.as_f64().ok_or_else(|| axis_error(name, v))?,
                    "tol" => h.tol = v.as_f64().ok_or_else(|| axis_error(name, v))?,
                    other => return Err(Error::InvalidArgument(format!("unknown SVM grid axis `{other}`"))),
                }
            }
            h.validate()?;
            ModelParams::Svm(h)
        }
        ModelKind::Gbt => {
            let mut h = cfg.gbt_base;
            for (name, v) in &cand.values {
                match name.as_str() {
                    "n_components" => n_components = Some(v.as_usize().ok_or_else(|| axis_error(name, v))?),
                    "n_estimators" => h.n_estimators = v.as_usize().ok_or_else(|| axis_error(name, v))?,
                    "learning_rate" => h.learning_rate = v.as_f64().ok_or_else(|| axis_error(name, v))?,
                    "colsample_bytree" => h.colsample_bytree = v.as_f64().ok_or_else(|| axis_error(name, v))?,
                    "max_depth" => h.max_depth = v.as_usize().ok_or_else(|| axis_error(name, v))?,
                    "reg_lambda" => h.reg_lambda = v.as_f64().ok_or_else(|| axis_error(name, v))?,
                    "min_child_weight" => h.min_child_weight = v.as_f64().ok_or_else(|| axis_error(name, v))?,
                    other => return Err(Error::InvalidArgument(format!("unknown boosting grid axis `{other}`"))),
                }
            }
            h.validate()?;
            ModelParams::Gbt(h)
        }
    };
    if n_components == Some(0) {
        return Err(Error::InvalidArgument("n_components must be >= 1".into()));
    }
    Ok(ModelSpec { n_components, params })
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Svm(SvmModel),
    Gbt(GbtModel),
}

impl TrainedModel {
    pub fn train(d: &Dataset, params: &ModelParams) -> Result<Self> {
        Ok(match params {
            ModelParams::Svm(h) => TrainedModel::Svm(svm_train(d, h)?),
            ModelParams::Gbt(h) => TrainedModel::Gbt(gbt_train(d, h)?),
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        match self {
            TrainedModel::Svm(m) => m.predict(x),
            TrainedModel::Gbt(m) => Ok(m.predict(x)?.0),
        }
    }

    /// Binary SVM machines that hit their iteration budget.
    pub fn solver_warnings(&self) -> usize {
        match self {
            TrainedModel::Svm(m) => m.machines.iter().filter(|b| !b.converged).count(),
            TrainedModel::Gbt(_) => 0,
        }
    }

    /// Whether the boosting training loss never rose between rounds.
    pub fn loss_non_increasing(&self) -> Option<bool> {
        match self {
            TrainedModel::Svm(_) => None,
            TrainedModel::Gbt(m) => Some(m.train_loss.windows(2).all(|w| w[1] <= w[0])),
        }
    }
}

/// Preprocessing (when fitted per split) plus the model.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub preprocess: Option<FittedPreprocess>,
    pub outliers: Option<OutlierReport>,
    pub n_columns: Option<usize>,
    pub model: TrainedModel,
}

impl FittedPipeline {
    pub fn predict(&self, d: &Dataset) -> Result<Vec<usize>> {
        let transformed;
        let d = match &self.preprocess {
            Some(p) => {
                transformed = p.transform(d)?;
                &transformed
            }
            None => d,
        };
        match self.n_columns {
            Some(k) => self.model.predict(&d.features().leading_cols(k)),
            None => self.model.predict(d.features()),
        }
    }

    pub fn scaler_means(&self) -> Option<&[f64]> {
        self.preprocess.as_ref().map(|p| p.scaler.means.as_slice())
    }
}

fn leading_columns(d: &Dataset, k: usize) -> Result<Dataset> {
    if k > d.n_features() {
        return Err(Error::InvalidArgument(format!(
            "n_components = {k} but only {} columns are available",
            d.n_features()
        )));
    }
    d.with_features(d.features().leading_cols(k), d.feature_names()[..k].to_vec())
}

/// Fits `spec` on `train` under the configured pipeline mode.
pub fn fit_pipeline(train: &Dataset, spec: &ModelSpec, cfg: &CvConfig) -> Result<FittedPipeline> {
    match cfg.mode {
        PipelineMode::PaperFaithful => {
            let data = match spec.n_components {
                Some(k) => leading_columns(train, k)?,
                None => train.clone(),
            };
            Ok(FittedPipeline {
                preprocess: None,
                outliers: None,
                n_columns: spec.n_components,
                model: TrainedModel::train(&data, &spec.params)?,
            })
        }
        PipelineMode::LeakageFree => {
            let mut pre = cfg.preprocess;
            if let Some(k) = spec.n_components {
                pre.pca = Some(PcaTarget::Components(k));
            }
            let out = fit_preprocess(train, &pre)?;
            Ok(FittedPipeline {
                model: TrainedModel::train(&out.train, &spec.params)?,
                preprocess: Some(out.fitted),
                outliers: out.outliers,
                n_columns: None,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Index of the winning candidate.
    pub best: usize,
    /// Mean inner accuracy per candidate; `None` when disqualified.
    pub scores: Vec<Option<f64>>,
}

/// Scores every candidate by mean accuracy over `inner_k` stratified folds
/// of `train`. Candidates that fail on any fold are disqualified; ties go to
/// the earliest candidate.
pub fn grid_search(train: &Dataset, specs: &[ModelSpec], inner_k: usize, seed: u64, cfg: &CvConfig) -> Result<GridOutcome> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let plan = stratified_kfold(train.labels(), inner_k, seed)?;
    let splits: Vec<(Dataset, Dataset)> = (0..inner_k)
        .map(|f| (train.select_rows(&plan.train_rows(f)), train.select_rows(&plan.test_rows(f))))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|c| (0..inner_k).map(move |f| (c, f))).collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (tr, te) = &splits[f];
            let fitted = fit_pipeline(tr, &specs[c], cfg)?;
            let pred = fitted.predict(te)?;
            let (_, m) = evaluate(te.labels(), &pred, te.class_names())?;
            Ok(m.accuracy)
        })
        .collect();

    let mut scores = Vec::with_capacity(specs.len());
    for (c, chunk) in results.chunks(inner_k).enumerate() {
        let mut sum = 0.0;
        let mut failed = None;
        for r in chunk {
            match r {
                Ok(a) => sum += a,
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        match failed {
            Some(msg) => {
                log::warn!("grid candidate {c} disqualified: {msg}");
                scores.push(None);
            }
            None => scores.push(Some(sum / inner_k as f64)),
        }
    }
    let mut best: Option<usize> = None;
    for (c, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            if best.is_none_or(|b| *s > scores[b].unwrap()) {
                best = Some(c);
            }
        }
    }
    let best = best.ok_or_else(|| Error::InvalidArgument("every grid candidate failed".into()))?;
    Ok(GridOutcome { best, scores })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub best_index: usize,
    pub best_params: Candidate,
    pub inner_accuracy: f64,
    pub candidate_scores: Vec<Option<f64>>,
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
    /// Scaler means used for this fold's final model.
    pub scaler_means: Vec<f64>,
    pub solver_warnings: usize,
    pub loss_non_increasing: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Metric names in report order, with accessors.
pub const AGGREGATE_METRICS: [(&str, fn(&Metrics) -> f64); 7] = [
    ("accuracy", |m| m.accuracy),
    ("micro_f1", |m| m.micro_f1),
    ("macro_f1", |m| m.macro_f1),
    ("micro_recall", |m| m.micro_recall),
    ("macro_recall", |m| m.macro_recall),
    ("micro_precision", |m| m.micro_precision),
    ("macro_precision", |m| m.macro_precision),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub rows_before: usize,
    pub rows_after: usize,
    pub n_components: usize,
    pub scaler_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub kind: ModelKind,
    pub mode: PipelineMode,
    pub outer_k: usize,
    pub inner_k: usize,
    pub seed: u64,
    pub class_names: Vec<String>,
    /// Rows entering cross-validation.
    pub n_rows: usize,
    /// Present in paper-faithful mode.
    pub preprocess: Option<PreprocessSummary>,
    pub candidates: Vec<Candidate>,
    pub outer_plan: FoldPlan,
    /// Original dataset row of each cross-validated row.
    pub source_rows: Vec<usize>,
    pub folds: Vec<FoldResult>,
}

impl CvReport {
    pub fn aggregate(&self) -> Vec<(&'static str, MeanStd)> {
        AGGREGATE_METRICS
            .iter()
            .map(|(name, f)| {
                let values: Vec<f64> = self.folds.iter().map(|r| f(&r.metrics)).collect();
                (*name, MeanStd::of(&values))
            })
            .collect()
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.aggregate()[0].1.mean
    }

    /// Most frequent winning candidate; ties to the lowest candidate index.
    pub fn modal_best_params(&self) -> &Candidate {
        let mut counts = vec![0usize; self.candidates.len()];
        for f in &self.folds {
            counts[f.best_index] += 1;
        }
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        &self.candidates[best]
    }
}

/// Nested cross-validation: an inner grid search on each outer training
/// split picks the candidate, which is refitted on the whole outer training
/// split and scored on the held-out fold.
pub fn nested_cv(d: &Dataset, grid: &ParamGrid, cfg: &CvConfig) -> Result<CvReport> {
    let candidates = grid.candidates();
    let specs = candidates
        .iter()
        .map(|c| model_spec(c, cfg))
        .collect::<Result<Vec<_>>>()?;

    let (data, source_rows, summary) = match cfg.mode {
        PipelineMode::PaperFaithful => {
            let out = fit_preprocess(d, &cfg.preprocess)?;
            let summary = PreprocessSummary {
                rows_before: d.n_rows(),
                rows_after: out.train.n_rows(),
                n_components: out.fitted.pca.as_ref().map_or(out.train.n_features(), |p| p.n_components()),
                scaler_means: out.fitted.scaler.means.clone(),
            };
            (out.train, out.kept_rows, Some(summary))
        }
        PipelineMode::LeakageFree => (d.clone(), (0..d.n_rows()).collect(), None),
    };

    let outer = stratified_kfold(data.labels(), cfg.outer_k, cfg.seed)?;
    let folds = (0..cfg.outer_k)
        .into_par_iter()
        .map(|f| -> Result<FoldResult> {
            let train = data.select_rows(&outer.train_rows(f));
            let test = data.select_rows(&outer.test_rows(f));
            let gs = grid_search(&train, &specs, cfg.inner_k, child_seed(cfg.seed, f as u64 + 1), cfg)?;
            let fitted = fit_pipeline(&train, &specs[gs.best], cfg)?;
            let pred = fitted.predict(&test)?;
            let (confusion, metrics) = evaluate(test.labels(), &pred, test.class_names())?;
            debug_assert_eq!(metrics.micro_f1, metrics.accuracy);
            let scaler_means = match (fitted.scaler_means(), &summary) {
                (Some(m), _) => m.to_vec(),
                (None, Some(s)) => s.scaler_means.clone(),
                (None, None) => Vec::new(),
            };
            Ok(FoldResult {
                fold: f,
                n_train: train.n_rows(),
                n_test: test.n_rows(),
                best_index: gs.best,
                best_params: candidates[gs.best].clone(),
                inner_accuracy: gs.scores[gs.best].unwrap(),
                candidate_scores: gs.scores,
                metrics,
                confusion,
                scaler_means,
                solver_warnings: fitted.model.solver_warnings(),
                loss_non_increasing: fitted.model.loss_non_increasing(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CvReport {
        kind: cfg.kind,
        mode: cfg.mode,
        outer_k: cfg.outer_k,
        inner_k: cfg.inner_k,
        seed: cfg.seed,
        class_names: d.class_names().to_vec(),
        n_rows: data.n_rows(),
        preprocess: summary,
        candidates,
        outer_plan: outer,
        source_rows,
        folds,
    })
}
