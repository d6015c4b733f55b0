//! Bayesian neural-network classifier for the probability that a point
//! satisfies a binary constraint.
//!
//! The posterior over weights is a factorized Gaussian trained by black-box
//! alpha-divergence minimization with reparameterized Monte Carlo gradients.
//! As `alpha -> 0` the energy reduces to the mean-field variational bound,
//! which is also available directly through [`Divergence::MeanFieldVb`].

mod energy;
mod network;
mod posterior;
mod train;

pub use energy::{alpha_energy, alpha_energy_with_draws, alpha_energy_with_gradient, NoiseDraws};
pub use network::{Activation, BnnArchitecture};
pub use posterior::{init_posterior, predict_prob, FrozenBnn, WeightPosterior};
pub use train::{train_constraint, AlphaTrainConfig, Divergence};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::LatentPoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training data contains a single class ({positives} positive of {total})")]
    DegenerateData { positives: usize, total: usize },
    #[error("input has {found} features, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite energy")]
    NumericalFailure,
}

/// A design-space point with its observed constraint outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledLatentPoint {
    pub z: LatentPoint,
    /// `true` when the constraint is satisfied.
    pub label: bool,
}

impl LabeledLatentPoint {
    pub fn new(z: LatentPoint, label: bool) -> Self {
        Self { z, label }
    }
}
