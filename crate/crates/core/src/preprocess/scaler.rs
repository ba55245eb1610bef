use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ScalerParams {
    /// Fits on `x`; constant columns are reported by index.
    pub fn fit(x: &Matrix) -> Result<Self> {
        let names: Vec<String> = (0..x.cols()).map(|j| format!("#{j}")).collect();
        Self::fit_named(x, &names)
    }

    pub fn fit_named(x: &Matrix, names: &[String]) -> Result<Self> {
        if x.rows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "scaler needs at least 2 rows, got {}",
                x.rows()
            )));
        }
        let (means, stds) = column_moments(x, StdConvention::Population);
        for j in 0..x.cols() {
            if is_constant_column(x, j) || stds[j] == 0.0 {
                return Err(Error::ConstantColumn(names[j].clone()));
            }
        }
        Ok(Self { means, stds })
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    /// (x - mean) / std, column by column.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.means).zip(&self.stds) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "scaler fitted on {} features, got {}",
                self.n_features(),
                x.cols()
            )));
        }
        Ok(())
    }
}

/// Divisor used for standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StdConvention {
    /// Divide by n.
    Population,
    /// Divide by n - 1.
    Sample,
}

pub(crate) fn is_constant_column(x: &Matrix, j: usize) -> bool {
    let first = x.get(0, j);
    (1..x.rows()).all(|i| x.get(i, j) == first)
}

/// Column means and standard deviations over all rows of `x`.
pub(crate) fn column_moments(x: &Matrix, convention: StdConvention) -> (Vec<f64>, Vec<f64>) {
    let means = x.column_means();
    let mut ss = vec![0.0; x.cols()];
    for r in x.row_iter() {
        for ((s, v), m) in ss.iter_mut().zip(r).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let denom = match convention {
        StdConvention::Population => x.rows() as f64,
        StdConvention::Sample => (x.rows() - 1) as f64,
    };
    let stds = ss.into_iter().map(|s| (s / denom).sqrt()).collect();
    (means, stds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn column(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn fit_population_std() {
        let p = ScalerParams::fit(&column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(p.means, vec![2.0]);
        assert_abs_diff_eq!(p.stds[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.stds[0], 0.81650, epsilon = 1e-5);
    }

    #[test]
    fn apply_known_column() {
        let x = column(&[1.0, 2.0, 3.0]);
        let p = ScalerParams::fit(&x).unwrap();
        let s = p.apply(&x).unwrap();
        let expected = [-1.22474, 0.0, 1.22474];
        for (a, b) in s.as_slice().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-5);
        }
        let at_mean = p.apply(&column(&[2.0])).unwrap();
        assert_eq!(at_mean.get(0, 0), 0.0);
    }

    #[test]
    fn standardized_column_has_unit_params() {
        let x = column(&[-1.3, 0.2, 4.4, 2.0, -0.7]);
        let s = ScalerParams::fit(&x).unwrap().apply(&x).unwrap();
        let p = ScalerParams::fit(&s).unwrap();
        assert_abs_diff_eq!(p.means[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.stds[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn inverse_restores_input() {
        let x = Matrix::from_rows(&[[1.0, 250.0], [3.5, -12.0], [2.25, 99.0]]).unwrap();
        let p = ScalerParams::fit(&x).unwrap();
        let back = p.invert(&p.apply(&x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x) <= 1e-12 * 250.0);
    }

    #[test]
    fn constant_column_rejected_by_name() {
        let x = Matrix::from_rows(&[[1.0, 7.0], [2.0, 7.0]]).unwrap();
        let err = ScalerParams::fit_named(&x, &["a".into(), "flat".into()]).unwrap_err();
        assert!(matches!(err, Error::ConstantColumn(c) if c == "flat"));
    }

    #[test]
    fn dimension_mismatch() {
        let p = ScalerParams::fit(&column(&[1.0, 2.0])).unwrap();
        assert!(p.apply(&Matrix::zeros(2, 2)).is_err());
    }
}
