//! Soft-margin kernel SVM: binary SMO solver and a one-vs-one multiclass
//! wrapper.

mod cache;
mod kernel;
mod smo;

pub use cache::DEFAULT_CACHE_BYTES;
pub use kernel::{kernel_eval, resolve_gamma, GammaMode, Kernel, KernelKind, KernelSpec};
pub use smo::BinarySolution;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration budget in full passes over the training rows.
    pub max_passes: usize,
    #[serde(default = "default_cache")]
    pub cache_bytes: usize,
}

fn default_cache() -> usize {
    DEFAULT_CACHE_BYTES
}

impl SvmHyper {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        Self {
            c,
            kernel,
            tol: 1e-3,
            max_passes: 200,
            cache_bytes: DEFAULT_CACHE_BYTES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        self.kernel.validate()
    }

    fn smo_params(&self) -> smo::SmoParams {
        smo::SmoParams {
            c: self.c,
            tol: self.tol,
            max_passes: self.max_passes,
            cache_bytes: self.cache_bytes,
        }
    }
}

/// Binary decision function `f(x) = Σ coef_i K(sv_i, x) + bias`; positive
/// values vote for `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: usize,
    pub negative: usize,
    pub support_vectors: Option<Matrix>,
    /// `a_i · y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl BinaryMachine {
    fn from_solution(
        x: &Matrix,
        rows: &[usize],
        y: &[f64],
        sol: &BinarySolution,
        positive: usize,
        negative: usize,
    ) -> Self {
        let sv: Vec<usize> = (0..rows.len()).filter(|&t| sol.alpha[t] > 0.0).collect();
        let sv_rows: Vec<usize> = sv.iter().map(|&t| rows[t]).collect();
        Self {
            positive,
            negative,
            support_vectors: (!sv_rows.is_empty()).then(|| x.select_rows(&sv_rows)),
            coefficients: sv.iter().map(|&t| sol.alpha[t] * y[t]).collect(),
            bias: sol.bias,
            converged: sol.converged,
            iterations: sol.iterations,
        }
    }

    pub fn n_support(&self) -> usize {
        self.coefficients.len()
    }

    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        let mut f = self.bias;
        if let Some(sv) = &self.support_vectors {
            for (row, coef) in sv.row_iter().zip(&self.coefficients) {
                f += coef * kernel.eval(row, x);
            }
        }
        f
    }
}

/// Trains one binary machine on `x` with labels in {+1, −1}.
pub fn smo_train_binary(x: &Matrix, y: &[f64], h: &SvmHyper) -> Result<(Kernel, BinarySolution)> {
    h.validate()?;
    let kernel = h.kernel.resolve(x)?;
    let rows: Vec<usize> = (0..x.rows()).collect();
    let sol = smo::solve(x, &rows, y, kernel, &h.smo_params())?;
    Ok((kernel, sol))
}

/// One-vs-one multiclass SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub format_version: u32,
    pub hyper: SvmHyper,
    pub kernel: Kernel,
    pub n_features: usize,
    /// Class ids seen in training, ascending.
    pub classes: Vec<usize>,
    /// Sorted by (positive, negative).
    pub machines: Vec<BinaryMachine>,
}

/// Trains one machine per unordered pair of classes present in `d`. The
/// lower class id of each pair is the positive side.
pub fn svm_train(d: &Dataset, h: &SvmHyper) -> Result<SvmModel> {
    h.validate()?;
    let groups = d.rows_by_class();
    let classes: Vec<usize> = (0..groups.len()).filter(|&c| !groups[c].is_empty()).collect();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "SVM training needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    let x = d.features();
    let kernel = h.kernel.resolve(x)?;
    let pairs: Vec<(usize, usize)> = classes
        .iter()
        .enumerate()
        .flat_map(|(k, &a)| classes[k + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let params = h.smo_params();
    let machines = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut rows: Vec<usize> = groups[a].iter().chain(&groups[b]).copied().collect();
            rows.sort_unstable();
            let y: Vec<f64> = rows
                .iter()
                .map(|&r| if d.labels()[r] == a { 1.0 } else { -1.0 })
                .collect();
            let sol = smo::solve(x, &rows, &y, kernel, &params)?;
            Ok(BinaryMachine::from_solution(x, &rows, &y, &sol, a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        format_version: MODEL_FORMAT_VERSION,
        hyper: *h,
        kernel,
        n_features: x.cols(),
        classes,
        machines,
    })
}

impl SvmModel {
    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(())
    }

    /// Decision values of every machine for every row (rows × machines).
    pub fn decision_function(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = Matrix::zeros(x.rows(), self.machines.len());
        for (i, row) in x.row_iter().enumerate() {
            for (m, machine) in self.machines.iter().enumerate() {
                out.set(i, m, machine.decision(&self.kernel, row));
            }
        }
        Ok(out)
    }

    /// Majority vote over pairwise machines. Ties go to the class with the
    /// largest summed |f| over the machines it won, then to the lowest id.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        self.check(x)?;
        let preds = x
            .row_iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|row| {
                let decisions: Vec<f64> = self
                    .machines
                    .iter()
                    .map(|m| m.decision(&self.kernel, row))
                    .collect();
                self.vote(&decisions)
            })
            .collect();
        Ok(preds)
    }

    pub(crate) fn vote(&self, decisions: &[f64]) -> usize {
        let n = self.classes.iter().max().map_or(0, |&c| c + 1);
        let mut votes = vec![0usize; n];
        let mut strength = vec![0.0f64; n];
        for (m, &f) in self.machines.iter().zip(decisions) {
            let winner = if f > 0.0 { m.positive } else { m.negative };
            votes[winner] += 1;
            strength[winner] += f.abs();
        }
        let mut best = self.classes[0];
        for &c in &self.classes[1..] {
            if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
                best = c;
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SvmModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse {
                what: "svm model",
                line: 1,
                message: format!("unsupported format version {}", model.format_version),
            });
        }
        Ok(model)
    }
}
