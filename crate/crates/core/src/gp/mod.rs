//! Sparse Gaussian process regression with the FITC approximation.
//!
//! The kernel is the ARD squared exponential. Hyperparameters live in log
//! space; inducing locations are free parameters trained jointly with them
//! unless frozen through [`FitOptions`].

mod fitc;
mod kernel;
mod train;

pub use fitc::{FitcGradient, FitcModel, GpPrediction, PointPrediction};
pub use kernel::{ard_kernel, KernelHyperparams};
pub use train::{AdamConfig, FitOptions};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{what} has length {found}, expected {expected}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
    #[error("matrix `{matrix}` is not positive definite after adding jitter")]
    NotPositiveDefinite { matrix: &'static str },
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("model has no factorization for the current parameters; condition it on data first")]
    StaleState,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
