use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Numerically stable softmax of one row of raw scores.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// First and second derivatives of the multiclass log-loss with respect to
/// raw scores: `g = p − onehot(y)`, `h = p (1 − p)`.
pub fn softmax_grad_hess(raw: &Matrix, labels: &[usize]) -> Result<(Matrix, Matrix)> {
    if raw.rows() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} score rows but {} labels",
            raw.rows(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= raw.cols()) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {} classes",
            raw.cols()
        )));
    }
    let mut grad = Matrix::zeros(raw.rows(), raw.cols());
    let mut hess = Matrix::zeros(raw.rows(), raw.cols());
    for (i, &label) in labels.iter().enumerate() {
        let p = softmax(raw.row(i));
        for (k, &pk) in p.iter().enumerate() {
            let target = if k == label { 1.0 } else { 0.0 };
            grad.set(i, k, pk - target);
            hess.set(i, k, pk * (1.0 - pk));
        }
    }
    Ok((grad, hess))
}

/// Mean multiclass log-loss `−mean_i log p_i[y_i]`.
pub fn log_loss(raw: &Matrix, labels: &[usize]) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let row = raw.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            lse - row[y]
        })
        .sum();
    total / labels.len() as f64
}
