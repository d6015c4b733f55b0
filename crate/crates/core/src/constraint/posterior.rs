use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::network::{backward, forward, Workspace};
use super::{BnnArchitecture, ConstraintError};
use crate::rng::seeded;

/// Factorized Gaussian over the flat weight vector of a [`BnnArchitecture`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightPosterior {
    pub architecture: BnnArchitecture,
    pub means: Vec<f64>,
    pub log_variances: Vec<f64>,
}

/// Initial posterior: means drawn from `N(0, 2 / (d_in + d_out))` per layer
/// (biases included), variances set to `1e-6` times that scale.
pub fn init_posterior(arch: &BnnArchitecture, seed: u64) -> Result<WeightPosterior, ConstraintError> {
    arch.validate()?;
    let mut rng = seeded(seed);
    let mut means = Vec::with_capacity(arch.num_params());
    let mut log_variances = Vec::with_capacity(arch.num_params());
    for (din, dout) in arch.layers() {
        let var = 2.0 / (din + dout) as f64;
        for _ in 0..din * dout + dout {
            let g: f64 = rng.sample(StandardNormal);
            means.push(g * var.sqrt());
            log_variances.push((1e-6 * var).ln());
        }
    }
    Ok(WeightPosterior { architecture: arch.clone(), means, log_variances })
}

impl WeightPosterior {
    pub fn num_params(&self) -> usize {
        self.means.len()
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        self.architecture.validate()?;
        let n = self.architecture.num_params();
        if self.means.len() != n || self.log_variances.len() != n {
            return Err(ConstraintError::InvalidArchitecture(format!(
                "posterior has {} means and {} log-variances for {n} weights",
                self.means.len(),
                self.log_variances.len()
            )));
        }
        if !self.means.iter().all(|m| m.is_finite()) || !self.log_variances.iter().all(|v| v.exp().is_finite()) {
            return Err(ConstraintError::NumericalFailure);
        }
        Ok(())
    }

    /// `w = mean + sd * eps` for one standard-normal draw `eps`.
    pub(crate) fn reparameterize(&self, eps: &[f64], out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = self.means[i] + (0.5 * self.log_variances[i]).exp() * eps[i];
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("posterior serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ConstraintError> {
        let p: Self = serde_json::from_str(s).map_err(|e| ConstraintError::InvalidArchitecture(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A fixed set of weight draws from a posterior. Probabilities computed from
/// it are deterministic and differentiable in the input, which is what the
/// acquisition optimizer needs.
#[derive(Debug, Clone)]
pub struct FrozenBnn {
    architecture: BnnArchitecture,
    samples: Vec<Vec<f64>>,
}

impl FrozenBnn {
    pub fn new(post: &WeightPosterior, mc_samples: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let n = post.num_params();
        let mut eps = vec![0.0; n];
        let samples = (0..mc_samples.max(1))
            .map(|_| {
                eps.iter_mut().for_each(|e| *e = rng.sample(StandardNormal));
                let mut w = vec![0.0; n];
                post.reparameterize(&eps, &mut w);
                w
            })
            .collect();
        Self { architecture: post.architecture.clone(), samples }
    }

    pub fn input_dim(&self) -> usize {
        self.architecture.input_dim()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    /// Mean logistic output over the frozen draws.
    pub fn prob(&self, x: &[f64]) -> f64 {
        let mut ws = Workspace::new(&self.architecture);
        let total: f64 = self.samples.iter().map(|w| sigmoid(forward(&self.architecture, w, x, &mut ws))).sum();
        total / self.samples.len() as f64
    }

    /// Probability and its gradient w.r.t. the input.
    pub fn prob_with_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut ws = Workspace::new(&self.architecture);
        let k = self.samples.len() as f64;
        let mut grad = vec![0.0; x.len()];
        let mut total = 0.0;
        for w in &self.samples {
            let p = sigmoid(forward(&self.architecture, w, x, &mut ws));
            total += p;
            backward(&self.architecture, w, p * (1.0 - p) / k, &mut ws, None, Some(&mut grad));
        }
        (total / k, grad)
    }
}

/// Monte Carlo predictive probability of constraint satisfaction for each
/// row of `zq`, averaging `mc_samples` weight draws taken from `seed`.
pub fn predict_prob(
    post: &WeightPosterior,
    zq: &[Vec<f64>],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<f64>, ConstraintError> {
    if mc_samples == 0 {
        return Err(ConstraintError::InvalidConfig("mc_samples must be at least 1".into()));
    }
    let d = post.architecture.input_dim();
    if let Some(bad) = zq.iter().find(|z| z.len() != d) {
        return Err(ConstraintError::DimensionMismatch { expected: d, found: bad.len() });
    }
    let frozen = FrozenBnn::new(post, mc_samples, seed);
    Ok(zq.iter().map(|z| frozen.prob(z)).collect())
}
