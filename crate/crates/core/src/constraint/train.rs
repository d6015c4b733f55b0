use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::energy::{alpha_energy_with_gradient, NoiseDraws};
use super::{init_posterior, BnnArchitecture, ConstraintError, LabeledLatentPoint, WeightPosterior};
use crate::adam::Adam;
use crate::rng::{sub_rng, sub_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    BlackBoxAlpha,
    /// The `alpha -> 0` limit, kept as a reference objective.
    MeanFieldVb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaTrainConfig {
    pub alpha: f64,
    pub mc_samples: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub divergence: Divergence,
    /// Variance of the zero-mean Gaussian weight prior.
    pub prior_variance: f64,
}

impl Default for AlphaTrainConfig {
    /// Settings for small problems: alpha 0.5, 50 draws, minibatches of 10.
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mc_samples: 50,
            minibatch_size: 10,
            learning_rate: 0.01,
            epochs: 150,
            seed: 0,
            divergence: Divergence::BlackBoxAlpha,
            prior_variance: 1.0,
        }
    }
}

impl AlphaTrainConfig {
    /// Settings for large labelled pools: minibatches of 1000, 5 epochs, learning rate 0.0005.
    pub fn large_pool() -> Self {
        Self { minibatch_size: 1000, epochs: 5, learning_rate: 0.0005, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        let bad = |m: &str| Err(ConstraintError::InvalidConfig(m.into()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if self.mc_samples == 0 {
            return bad("mc_samples must be at least 1");
        }
        if self.minibatch_size == 0 {
            return bad("minibatch_size must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.prior_variance > 0.0 && self.prior_variance.is_finite()) {
            return bad("prior_variance must be positive");
        }
        Ok(())
    }
}

/// Trains a weight posterior on labelled points with minibatch Adam.
///
/// The posterior is initialized from `sub_seed(cfg.seed, 0)`; minibatch order
/// and Monte Carlo draws come from a second stream, so a fixed seed and data
/// order reproduce the result bit for bit.
pub fn train_constraint(
    data: &[LabeledLatentPoint],
    arch: &BnnArchitecture,
    cfg: &AlphaTrainConfig,
) -> Result<WeightPosterior, ConstraintError> {
    cfg.validate()?;
    arch.validate()?;
    let d = arch.input_dim();
    if let Some(bad) = data.iter().find(|p| p.z.len() != d) {
        return Err(ConstraintError::DimensionMismatch { expected: d, found: bad.z.len() });
    }
    let positives = data.iter().filter(|p| p.label).count();
    if positives == 0 || positives == data.len() {
        return Err(ConstraintError::DegenerateData { positives, total: data.len() });
    }
    let mut post = init_posterior(arch, sub_seed(cfg.seed, 0))?;
    if cfg.epochs == 0 {
        return Ok(post);
    }
    let n_w = post.num_params();
    let mut params: Vec<f64> = post.means.iter().chain(&post.log_variances).copied().collect();
    let mut adam = Adam::new(params.len(), cfg.learning_rate, 0.9, 0.999, 1e-8);
    let mut rng = sub_rng(cfg.seed, 1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(cfg.minibatch_size);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.minibatch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let draws = NoiseDraws::sample(n_w, cfg.mc_samples, &mut rng);
            let (_, grad) = alpha_energy_with_gradient(&post, &batch, cfg, data.len(), &draws)?;
            adam.step(&mut params, &grad);
            post.means.copy_from_slice(&params[..n_w]);
            post.log_variances.copy_from_slice(&params[n_w..]);
        }
    }
    post.validate()?;
    Ok(post)
}
