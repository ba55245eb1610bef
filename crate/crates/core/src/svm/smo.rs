//! Binary soft-margin SVM trained by sequential minimal optimization.
//!
//! The dual is solved as
//!
//! ```text
//! min_a  ½ aᵀQa − Σ a_i   s.t.  0 ≤ a_i ≤ C,  Σ y_i a_i = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Each step picks the pair that violates the KKT conditions the most: `i`
//! maximises `−y_t ∇_t` over the indices that may still move up, `j`
//! minimises it over those that may move down. Their gap is the largest
//! `|E_i − E_j|` among violating pairs, and the solver stops once it falls
//! below `tol`.

use super::cache::KernelCache;
use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    /// Dual variables, one per training row, each in [0, C].
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the KKT gap closed.
    pub converged: bool,
    /// Final maximal KKT violation `m(a) − M(a)`.
    pub kkt_gap: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    /// Iteration budget in units of full passes (`max_passes · n` steps).
    pub max_passes: usize,
    pub cache_bytes: usize,
}

/// Trains on the rows of `x` listed in `rows` with labels `y` (±1).
pub fn solve(x: &Matrix, rows: &[usize], y: &[f64], kernel: Kernel, p: &SmoParams) -> Result<BinarySolution> {
    let n = rows.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} rows but {} labels", y.len())));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument(format!("binary labels must be ±1, got {bad}")));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::InvalidArgument(
            "binary SVM needs both classes present".into(),
        ));
    }
    if !(p.c > 0.0) || !(p.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "C and tol must be > 0, got C={} tol={}",
            p.c, p.tol
        )));
    }

    let c = p.c;
    let mut cache = KernelCache::new(x, rows, kernel, p.cache_bytes);
    let qd = cache.diagonal();
    let mut alpha = vec![0.0; n];
    // Gradient of the dual objective: Qa − e.
    let mut grad = vec![-1.0; n];

    let max_iter = p.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    let mut gap;

    loop {
        let (i, j, g) = select_pair(&alpha, &grad, y, c);
        gap = g;
        if gap < p.tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (i, j) = (i.unwrap(), j.unwrap());
        let ki = cache.row(i);
        let kj = cache.row(j);
        let qij = y[i] * y[j] * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    if !converged {
        log::warn!(
            "SMO stopped after {iterations} iterations with KKT gap {gap:e} (tol {:e})",
            p.tol
        );
    }
    let bias = compute_bias(&alpha, &grad, y, c);
    Ok(BinarySolution {
        alpha,
        bias,
        iterations,
        converged,
        kkt_gap: gap,
    })
}

#[inline]
fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

#[inline]
fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Maximal violating pair; ties resolve to the lowest index.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> (Option<usize>, Option<usize>, f64) {
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    let mut i = None;
    let mut j = None;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && v > up {
            up = v;
            i = Some(t);
        }
        if in_low(alpha[t], y[t], c) && v < low {
            low = v;
            j = Some(t);
        }
    }
    if i.is_none() || j.is_none() {
        return (i, j, f64::NEG_INFINITY);
    }
    (i, j, up - low)
}

/// Bias `b` of `f(x) = Σ a_i y_i K(x_i, x) + b`: the mean of `−y_i ∇_i` over
/// free variables, or the midpoint of the feasible interval if none is free.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut sum = 0.0;
    let mut free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}
