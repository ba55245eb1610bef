//! Multiclass classification toolkit for tabular morphological data.
//!
//! The pipeline standardises features, drops per-class z-score outliers,
//! projects onto principal components and trains either a one-vs-one kernel
//! SVM or a softmax gradient-boosted tree ensemble. Model selection runs a
//! nested, stratified cross-validation with an inner grid search.

pub mod dataset;
pub mod error;
pub mod gbt;
pub mod linalg;
pub mod modelselect;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod svm;

pub use dataset::{load_csv, Dataset};
pub use error::{Error, ErrorKind, Result};
pub use linalg::Matrix;
