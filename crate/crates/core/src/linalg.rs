//! Dense row-major matrices and a cyclic Jacobi eigensolver for symmetric
//! matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default stopping tolerance on the largest off-diagonal entry.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;
/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;
/// Largest asymmetry accepted by [`symmetric_eigen`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense real matrix stored row-major. Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {m}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(n, m, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.values[i * n + i] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.values[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let dst = &mut out.values[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// Copies the given rows, in order. Panics on an empty selection.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        assert!(!idx.is_empty(), "row selection must be non-empty");
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            values,
        }
    }

    /// Keeps the leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> Matrix {
        assert!(k > 0 && k <= self.cols);
        if k == self.cols {
            return self.clone();
        }
        let mut values = Vec::with_capacity(self.rows * k);
        for r in self.row_iter() {
            values.extend_from_slice(&r[..k]);
        }
        Matrix {
            rows: self.rows,
            cols: k,
            values,
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for r in self.row_iter() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Population covariance (divide by `rows`) of the column-centred matrix.
pub fn covariance(x: &Matrix) -> Result<Matrix> {
    if x.rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    let p = x.cols();
    let means = x.column_means();
    let mut cov = Matrix::zeros(p, p);
    let mut centred = vec![0.0; p];
    for r in x.row_iter() {
        for ((c, v), m) in centred.iter_mut().zip(r).zip(&means) {
            *c = v - m;
        }
        for i in 0..p {
            let ci = centred[i];
            for j in i..p {
                cov.values[i * p + j] += ci * centred[j];
            }
        }
    }
    let n = x.rows() as f64;
    for i in 0..p {
        for j in i..p {
            let v = cov.values[i * p + j] / n;
            cov.values[i * p + j] = v;
            cov.values[j * p + i] = v;
        }
    }
    Ok(cov)
}

/// Spectral decomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector paired with `eigenvalues[k]`.
    pub eigenvectors: Matrix,
    /// Number of Jacobi sweeps performed.
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.col(k)
    }
}

fn max_off_diagonal(a: &[f64], n: usize) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            m = m.max(a[i * n + j].abs());
        }
    }
    m
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps rotate every upper-triangle pair in row order until the largest
/// off-diagonal magnitude drops below `tol * max(1, ‖A‖_F)`. Eigenvalues are
/// returned in descending order and every eigenvector is signed so that its
/// largest-magnitude entry is positive (ties: first such entry).
pub fn symmetric_eigen(a: &Matrix, tol: f64) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {tol}")));
    }
    let n = a.rows();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((a.get(i, j) - a.get(j, i)).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }

    // Work on the symmetrised copy so rounding asymmetry cannot accumulate.
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let mut v = Matrix::identity(n).values;
    let threshold = tol * a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    let mut off = max_off_diagonal(&w, n);
    while off >= threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_diagonal: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                // Rotation angle annihilating a_pq (Golub & Van Loan, sym.schur2).
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = w[k * n + p];
                    let akq = w[k * n + q];
                    w[k * n + p] = c * akp - s * akq;
                    w[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[p * n + k];
                    let aqk = w[q * n + k];
                    w[p * n + k] = c * apk - s * aqk;
                    w[q * n + k] = s * apk + c * aqk;
                }
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        off = max_off_diagonal(&w, n);
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the original index order among equal eigenvalues.
    order.sort_by(|&i, &j| w[j * n + j].total_cmp(&w[i * n + i]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| w[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for k in 0..n {
            if v[k * n + src].abs() > v[pivot * n + src].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors.set(k, dst, sign * v[k * n + src]);
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: vectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn covariance_of_identical_rows_is_zero() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]).unwrap();
        let c = covariance(&x).unwrap();
        assert!(c.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_population_convention() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let c = covariance(&x).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap());
    }

    #[test]
    fn covariance_is_exactly_symmetric() {
        let x = Matrix::from_rows(&[[0.3, 1.7, -2.0], [4.1, 0.2, 0.9], [-1.3, 2.2, 5.5], [0.7, -0.4, 1.1]])
            .unwrap();
        let c = covariance(&x).unwrap();
        assert_eq!(c, c.transpose());
    }

    #[test]
    fn covariance_rejects_single_row() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(covariance(&x), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn eigen_identity() {
        let e = symmetric_eigen(&Matrix::identity(3), DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigen_two_by_two() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&a, DEFAULT_EIGEN_TOL).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.eigenvector(0);
        let v1 = e.eigenvector(1);
        assert_abs_diff_eq!(v0[0], h, epsilon = 1e-12);
        assert_abs_diff_eq!(v0[1], h, epsilon = 1e-12);
        // [1,-1]/sqrt2 up to sign; the sign convention puts the first
        // (tied largest) entry positive.
        assert_abs_diff_eq!(v1[0].abs(), h, epsilon = 1e-12);
        assert_abs_diff_eq!(v1[0], -v1[1], epsilon = 1e-12);
    }

    #[test]
    fn eigen_diagonal_sorted_descending() {
        let a = Matrix::from_diagonal(&[5.0, 2.0, 9.0]);
        let e = symmetric_eigen(&a, DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(e.eigenvalues, vec![9.0, 5.0, 2.0]);
        assert_eq!(e.eigenvector(0), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn eigen_rejects_bad_input() {
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(symmetric_eigen(&rect, 1e-12), Err(Error::DimensionMismatch(_))));
        let asym = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&asym, 1e-12), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn eigenvector_sign_convention() {
        let a = Matrix::from_rows(&[[4.0, -2.0, 0.5], [-2.0, 3.0, -1.0], [0.5, -1.0, 1.0]]).unwrap();
        let e = symmetric_eigen(&a, DEFAULT_EIGEN_TOL).unwrap();
        for k in 0..3 {
            let v = e.eigenvector(k);
            let big = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn matrix_rejects_non_finite() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(0, 2, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let ata = a.transpose().matmul(&a).unwrap();
        assert_eq!(ata, Matrix::from_rows(&[[35.0, 44.0], [44.0, 56.0]]).unwrap());
        assert!(a.matmul(&a).is_err());
    }
}
