use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "poly",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(KernelKind::Linear),
            "poly" | "polynomial" => Some(KernelKind::Polynomial),
            "rbf" => Some(KernelKind::Rbf),
            "sigmoid" => Some(KernelKind::Sigmoid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaMode {
    /// 1 / (n_features · pooled variance of the training matrix).
    Scale,
    /// 1 / n_features.
    Auto,
    Fixed(f64),
}

impl GammaMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scale" => Some(GammaMode::Scale),
            "auto" => Some(GammaMode::Auto),
            other => other.parse::<f64>().ok().map(GammaMode::Fixed),
        }
    }
}

impl std::fmt::Display for GammaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GammaMode::Scale => f.write_str("scale"),
            GammaMode::Auto => f.write_str("auto"),
            GammaMode::Fixed(g) => write!(f, "{g}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: GammaMode,
    /// Polynomial only.
    pub degree: u32,
    /// Polynomial and sigmoid.
    pub coef0: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, gamma: GammaMode) -> Self {
        Self {
            kind,
            gamma,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub fn linear() -> Self {
        Self::new(KernelKind::Linear, GammaMode::Scale)
    }

    pub fn rbf(gamma: GammaMode) -> Self {
        Self::new(KernelKind::Rbf, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if let GammaMode::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("gamma must be > 0, got {g}")));
            }
        }
        if self.degree < 1 {
            return Err(Error::InvalidArgument("polynomial degree must be >= 1".into()));
        }
        if !self.coef0.is_finite() {
            return Err(Error::InvalidArgument("coef0 must be finite".into()));
        }
        Ok(())
    }

    /// Fixes gamma against the training matrix.
    pub fn resolve(&self, x: &Matrix) -> Result<Kernel> {
        self.validate()?;
        Ok(Kernel {
            kind: self.kind,
            gamma: resolve_gamma(self.gamma, x)?,
            degree: self.degree,
            coef0: self.coef0,
        })
    }
}

/// Kernel with a numeric gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl Kernel {
    #[inline]
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::Rbf => (-self.gamma * squared_distance(x, z)).exp(),
            KernelKind::Polynomial => (self.gamma * dot(x, z) + self.coef0).powi(self.degree as i32),
            KernelKind::Sigmoid => (self.gamma * dot(x, z) + self.coef0).tanh(),
        }
    }
}

/// Evaluates `spec`'s kernel with an already resolved `gamma`.
pub fn kernel_eval(spec: &KernelSpec, gamma: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel arguments have lengths {} and {}",
            x.len(),
            z.len()
        )));
    }
    let k = Kernel {
        kind: spec.kind,
        gamma,
        degree: spec.degree,
        coef0: spec.coef0,
    };
    Ok(k.eval(x, z))
}

pub fn resolve_gamma(mode: GammaMode, x: &Matrix) -> Result<f64> {
    let p = x.cols() as f64;
    match mode {
        GammaMode::Fixed(g) => Ok(g),
        GammaMode::Auto => Ok(1.0 / p),
        GammaMode::Scale => {
            let v = x.as_slice();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            if var <= 0.0 {
                return Err(Error::InvalidArgument(
                    "gamma='scale' is undefined for a matrix with zero variance".into(),
                ));
            }
            Ok(1.0 / (p * var))
        }
    }
}
