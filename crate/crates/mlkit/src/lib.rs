//! Small numerical toolkit backing the performance estimator: feature
//! preprocessing (scalers and PCA), a handful of regression families with a
//! uniform fit/predict contract, and accuracy metrics.

pub mod forest;
pub mod metrics;
pub mod preprocess;
pub mod regress;
pub mod tree;

pub use nalgebra;
pub use nalgebra::{DMatrix, DVector};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MlkitError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("expected {expect} columns, got {got}")]
    DimensionMismatch { expect: usize, got: usize },
    #[error("feature matrix and targets disagree: {rows} rows vs {targets} targets")]
    RowTargetMismatch { rows: usize, targets: usize },
    #[error("invalid hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("every target is zero; percentage error is undefined")]
    AllZeroTargets,
}
