//! Gradient-boosted regression trees with a softmax multiclass objective.
//!
//! Every boosting round fits one tree per class to that class's column of
//! log-loss gradients and hessians, then adds `learning_rate · tree(x)` to
//! the class's raw score.

mod objective;
mod tree;

pub use objective::{log_loss, softmax, softmax_grad_hess};
pub use tree::{build_tree, sample_columns, Node, RegressionTree};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{prng, tree_seed};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtHyper {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub colsample_bytree: f64,
    pub max_depth: usize,
    pub reg_lambda: f64,
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for GbtHyper {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.3,
            colsample_bytree: 1.0,
            max_depth: 6,
            reg_lambda: 1.0,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl GbtHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_estimators < 1 {
            return bad("n_estimators must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad(format!(
                "colsample_bytree must be in (0, 1], got {}",
                self.colsample_bytree
            ));
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1".into());
        }
        if !(self.reg_lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return bad("reg_lambda and min_child_weight must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub format_version: u32,
    pub hyper: GbtHyper,
    pub n_classes: usize,
    pub n_features: usize,
    /// Initial raw score of every class.
    pub base_score: f64,
    /// Round-major: tree for class `k` of round `r` sits at `r · n_classes + k`.
    pub trees: Vec<RegressionTree>,
    /// Mean training log-loss before the first round and after each round.
    pub train_loss: Vec<f64>,
}

pub fn gbt_train(d: &Dataset, h: &GbtHyper) -> Result<GbtModel> {
    h.validate()?;
    let present = d.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InvalidArgument(format!(
            "boosting needs at least 2 classes, found {present}"
        )));
    }
    let x = d.features();
    let labels = d.labels();
    let k = d.n_classes();
    let sorted = tree::SortedColumns::new(x);
    let base_score = 0.0;
    let mut raw = Matrix::new(x.rows(), k, vec![base_score; x.rows() * k])?;
    let mut train_loss = vec![log_loss(&raw, labels)];
    let mut trees = Vec::with_capacity(h.n_estimators * k);

    for round in 0..h.n_estimators {
        let (grad, hess) = softmax_grad_hess(&raw, labels)?;
        let round_trees: Vec<RegressionTree> = (0..k)
            .into_par_iter()
            .map(|class| {
                let mut rng = prng(tree_seed(h.seed, round, k, class));
                tree::build_tree_presorted(x, &sorted, &grad.col(class), &hess.col(class), h, &mut rng)
            })
            .collect();
        for (i, row) in x.row_iter().enumerate() {
            let scores = raw.row_mut(i);
            for (s, t) in scores.iter_mut().zip(&round_trees) {
                *s += h.learning_rate * t.predict_row(row);
            }
        }
        train_loss.push(log_loss(&raw, labels));
        trees.extend(round_trees);
    }

    Ok(GbtModel {
        format_version: MODEL_FORMAT_VERSION,
        hyper: *h,
        n_classes: k,
        n_features: x.cols(),
        base_score,
        trees,
        train_loss,
    })
}

impl GbtModel {
    pub fn raw_scores(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        let k = self.n_classes;
        let mut raw = Matrix::new(x.rows(), k, vec![self.base_score; x.rows() * k])?;
        for (i, row) in x.row_iter().enumerate() {
            let scores = raw.row_mut(i);
            for (t, tree) in self.trees.iter().enumerate() {
                scores[t % k] += self.hyper.learning_rate * tree.predict_row(row);
            }
        }
        Ok(raw)
    }

    /// Class ids (argmax, ties to the lowest id) and softmax probabilities.
    pub fn predict(&self, x: &Matrix) -> Result<(Vec<usize>, Matrix)> {
        let raw = self.raw_scores(x)?;
        let mut probs = Matrix::zeros(raw.rows(), raw.cols());
        let mut ids = Vec::with_capacity(raw.rows());
        for i in 0..raw.rows() {
            let p = softmax(raw.row(i));
            let mut best = 0;
            for (c, &v) in p.iter().enumerate() {
                if v > p[best] {
                    best = c;
                }
            }
            ids.push(best);
            probs.row_mut(i).copy_from_slice(&p);
        }
        Ok((ids, probs))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GbtModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse {
                what: "gbt model",
                line: 1,
                message: format!("unsupported format version {}", model.format_version),
            });
        }
        if model.trees.len() % model.n_classes.max(1) != 0 {
            return Err(Error::Parse {
                what: "gbt model",
                line: 1,
                message: "tree count is not a multiple of the class count".into(),
            });
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_clusters() -> Dataset {
        let x = Matrix::new(10, 1, vec![0.0, 0.1, 0.2, 0.3, 0.4, 10.0, 10.1, 10.2, 10.3, 10.4]).unwrap();
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        Dataset::new(x, labels, vec!["f".into()], vec!["A".into(), "B".into()]).unwrap()
    }

    #[test]
    fn single_round_separates_clusters() {
        let d = two_clusters();
        let h = GbtHyper {
            n_estimators: 1,
            learning_rate: 1.0,
            ..GbtHyper::default()
        };
        let m = gbt_train(&d, &h).unwrap();
        assert_eq!(m.trees.len(), 2);
        let (ids, probs) = m.predict(d.features()).unwrap();
        assert_eq!(ids, d.labels());
        for (i, &y) in d.labels().iter().enumerate() {
            assert!(probs.get(i, y) > 0.5);
        }
    }

    #[test]
    fn zero_learning_rate_rejected() {
        let h = GbtHyper {
            learning_rate: 0.0,
            ..GbtHyper::default()
        };
        assert!(gbt_train(&two_clusters(), &h).is_err());
        assert!(GbtHyper { colsample_bytree: 1.5, ..GbtHyper::default() }.validate().is_err());
        assert!(GbtHyper { max_depth: 0, ..GbtHyper::default() }.validate().is_err());
    }

    #[test]
    fn zero_tree_model_is_uniform() {
        let m = GbtModel {
            format_version: MODEL_FORMAT_VERSION,
            hyper: GbtHyper::default(),
            n_classes: 4,
            n_features: 2,
            base_score: 0.0,
            trees: vec![],
            train_loss: vec![],
        };
        let (ids, probs) = m.predict(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(ids, vec![0, 0, 0]);
        assert!(probs.as_slice().iter().all(|&p| p == 0.25));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let d = two_clusters();
        let m = gbt_train(&d, &GbtHyper { n_estimators: 5, ..GbtHyper::default() }).unwrap();
        let (_, probs) = m.predict(d.features()).unwrap();
        for row in probs.row_iter() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let d = two_clusters();
        let m = gbt_train(&d, &GbtHyper { n_estimators: 3, ..GbtHyper::default() }).unwrap();
        let back = GbtModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let a = m.raw_scores(d.features()).unwrap();
        let b = back.raw_scores(d.features()).unwrap();
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
