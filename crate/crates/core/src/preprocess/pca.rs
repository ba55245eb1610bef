//! Principal component analysis via the covariance eigendecomposition.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, symmetric_eigen, Matrix, DEFAULT_EIGEN_TOL};

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PcaTarget {
    /// Smallest k whose cumulative explained ratio reaches the value.
    VarianceRatio(f64),
    /// Exactly this many components.
    Components(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// n_features × k, columns are principal axes.
    pub components: Matrix,
    /// Variance of each kept component's scores.
    pub explained_variance: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    /// Ratios for every component, kept or not.
    pub full_explained_ratio: Vec<f64>,
    pub target: PcaTarget,
    pub input_means: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.cols()
    }

    pub fn n_features(&self) -> usize {
        self.components.rows()
    }

    /// Running sum of `full_explained_ratio`; the last entry is exactly 1.
    pub fn cumulative_ratio(&self) -> Vec<f64> {
        cumulative(&self.full_explained_ratio)
    }

    /// Loading of `feature` on component `k`.
    pub fn loading(&self, feature: usize, k: usize) -> f64 {
        self.components.get(feature, k)
    }

    /// Centres `x` with the fit means and projects onto the kept axes.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "PCA fitted on {} features, got {}",
                self.n_features(),
                x.cols()
            )));
        }
        let mut centred = x.clone();
        for i in 0..centred.rows() {
            for (v, m) in centred.row_mut(i).iter_mut().zip(&self.input_means) {
                *v -= m;
            }
        }
        centred.matmul(&self.components)
    }

    /// For each kept component, the `top_n` features ranked by absolute
    /// loading (descending, ties by feature order).
    pub fn top_features(&self, feature_names: &[String], top_n: usize) -> Result<Vec<Vec<String>>> {
        if feature_names.len() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} features",
                feature_names.len(),
                self.n_features()
            )));
        }
        if top_n > self.n_features() {
            return Err(Error::InvalidArgument(format!(
                "top_n {top_n} exceeds {} features",
                self.n_features()
            )));
        }
        Ok((0..self.n_components())
            .map(|k| {
                let mut order: Vec<usize> = (0..self.n_features()).collect();
                order.sort_by(|&a, &b| self.loading(b, k).abs().total_cmp(&self.loading(a, k).abs()));
                order[..top_n].iter().map(|&f| feature_names[f].clone()).collect()
            })
            .collect())
    }

    /// Scree data: component, explained ratio, cumulative ratio.
    pub fn write_scree_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "component,explained_ratio,cumulative_ratio,kept")?;
        for (k, (r, c)) in self
            .full_explained_ratio
            .iter()
            .zip(self.cumulative_ratio())
            .enumerate()
        {
            writeln!(w, "{},{r},{c},{}", k + 1, k < self.n_components())?;
        }
        Ok(())
    }

    /// One row per kept component: the ranked feature names and their loadings.
    pub fn write_loadings_csv<W: Write>(
        &self,
        mut w: W,
        feature_names: &[String],
        top_n: usize,
    ) -> Result<()> {
        let top = self.top_features(feature_names, top_n)?;
        let io = |e| Error::io("<loadings>", e);
        let mut header = String::from("component");
        for r in 1..=top_n {
            header.push_str(&format!(",feature_{r},loading_{r}"));
        }
        writeln!(w, "{header}").map_err(io)?;
        for (k, names) in top.iter().enumerate() {
            write!(w, "{k}").map_err(io)?;
            for name in names {
                let f = feature_names.iter().position(|n| n == name).unwrap();
                write!(w, ",{name},{}", self.loading(f, k)).map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        Ok(())
    }
}

fn cumulative(ratios: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = ratios
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Fits PCA on `x` (expected to be standardised by the caller).
pub fn pca_fit(x: &Matrix, target: PcaTarget) -> Result<PcaModel> {
    let p = x.cols();
    match target {
        PcaTarget::VarianceRatio(t) if !(t > 0.0 && t <= 1.0) => {
            return Err(Error::InvalidArgument(format!(
                "variance threshold must be in (0, 1], got {t}"
            )))
        }
        PcaTarget::Components(k) if k == 0 || k > p => {
            return Err(Error::InvalidArgument(format!(
                "component count must be in 1..={p}, got {k}"
            )))
        }
        _ => {}
    }
    let cov = covariance(x)?;
    let eig = symmetric_eigen(&cov, DEFAULT_EIGEN_TOL)?;
    let variances: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = variances.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("input has zero total variance".into()));
    }
    let ratios: Vec<f64> = variances.iter().map(|v| v / total).collect();
    let k = match target {
        PcaTarget::Components(k) => k,
        PcaTarget::VarianceRatio(t) => {
            let cum = cumulative(&ratios);
            cum.iter().position(|&c| c >= t).unwrap() + 1
        }
    };
    let mut components = Matrix::zeros(p, k);
    for i in 0..p {
        for j in 0..k {
            components.set(i, j, eig.eigenvectors.get(i, j));
        }
    }
    Ok(PcaModel {
        components,
        explained_variance: variances[..k].to_vec(),
        explained_ratio: ratios[..k].to_vec(),
        full_explained_ratio: ratios,
        target,
        input_means: x.column_means(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::covariance;
    use crate::preprocess::ScalerParams;
    use approx::assert_abs_diff_eq;

    fn sample_data() -> Matrix {
        Matrix::from_rows(&[
            [2.5, 2.4, 0.3],
            [0.5, 0.7, 1.9],
            [2.2, 2.9, -0.4],
            [1.9, 2.2, 0.8],
            [3.1, 3.0, 0.1],
            [2.3, 2.7, 1.4],
            [2.0, 1.6, -1.0],
            [1.0, 1.1, 0.6],
            [1.5, 1.6, 0.2],
            [1.1, 0.9, 2.2],
        ])
        .unwrap()
    }

    #[test]
    fn full_threshold_keeps_everything() {
        let m = pca_fit(&sample_data(), PcaTarget::VarianceRatio(1.0)).unwrap();
        assert_eq!(m.n_components(), 3);
        let s: f64 = m.full_explained_ratio.iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rank_one_data_needs_one_component() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [4.0, 4.0], [-1.0, -1.0]]).unwrap();
        let s = ScalerParams::fit(&x).unwrap().apply(&x).unwrap();
        let m = pca_fit(&s, PcaTarget::VarianceRatio(0.9999)).unwrap();
        assert_eq!(m.n_components(), 1);
    }

    #[test]
    fn scores_have_component_variances_and_no_correlation() {
        let x = sample_data();
        let m = pca_fit(&x, PcaTarget::VarianceRatio(1.0)).unwrap();
        let scores = m.transform(&x).unwrap();
        let c = covariance(&scores).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(c.get(i, i), m.explained_variance[i], epsilon = 1e-8);
            for j in 0..3 {
                if i != j {
                    assert_abs_diff_eq!(c.get(i, j), 0.0, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn diagonal_covariance_gives_identity_projection() {
        // Columns are uncorrelated with variances 4 > 1 > 0.25.
        let x = Matrix::from_rows(&[
            [2.0, 1.0, 0.5],
            [-2.0, 1.0, -0.5],
            [2.0, -1.0, -0.5],
            [-2.0, -1.0, 0.5],
        ])
        .unwrap();
        let m = pca_fit(&x, PcaTarget::VarianceRatio(1.0)).unwrap();
        assert_eq!(m.components, Matrix::identity(3));
        let centred = x.clone();
        assert_eq!(m.transform(&x).unwrap(), centred);
    }

    #[test]
    fn threshold_picks_smallest_k() {
        let x = sample_data();
        let full = pca_fit(&x, PcaTarget::VarianceRatio(1.0)).unwrap();
        let cum = full.cumulative_ratio();
        let t = (cum[0] + cum[1]) / 2.0;
        let m = pca_fit(&x, PcaTarget::VarianceRatio(t)).unwrap();
        assert_eq!(m.n_components(), 2);
        assert!(cum[0] < t && cum[1] >= t);
        let exact = pca_fit(&x, PcaTarget::VarianceRatio(cum[0])).unwrap();
        assert_eq!(exact.n_components(), 1);
    }

    #[test]
    fn top_features_rank_by_absolute_loading() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let model = PcaModel {
            components: Matrix::from_rows(&[[0.1, 0.3], [-0.99, 0.3], [0.05, 0.9]]).unwrap(),
            explained_variance: vec![2.0, 1.0],
            explained_ratio: vec![0.6, 0.3],
            full_explained_ratio: vec![0.6, 0.3, 0.1],
            target: PcaTarget::Components(2),
            input_means: vec![0.0; 3],
        };
        let top = model.top_features(&names, 2).unwrap();
        assert_eq!(top[0], ["b", "a"]);
        // tie between a and b resolved by feature order
        assert_eq!(top[1], ["c", "a"]);
        let all = model.top_features(&names, 3).unwrap();
        let mut sorted = all[0].clone();
        sorted.sort();
        assert_eq!(sorted, names);
        assert!(model.top_features(&names, 4).is_err());
    }

    #[test]
    fn invalid_targets() {
        let x = sample_data();
        assert!(pca_fit(&x, PcaTarget::VarianceRatio(0.0)).is_err());
        assert!(pca_fit(&x, PcaTarget::VarianceRatio(1.5)).is_err());
        assert!(pca_fit(&x, PcaTarget::Components(4)).is_err());
        let m = pca_fit(&x, PcaTarget::Components(2)).unwrap();
        assert!(m.transform(&Matrix::zeros(1, 2)).is_err());
    }
}
