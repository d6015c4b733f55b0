//! Synthetic latent space: anchors standing in for encoded training data, a
//! stochastic decoder that degrades away from them, and a bump objective.

mod decoder;
mod diagnostic;
mod objective;

pub use decoder::{corrupt, perturb_training_points, synth_decode, SyntheticDecoder, METHANE};
pub use diagnostic::{diagnostic_experiment, write_diagnostic_csv, DiagnosticConfig, DiagnosticRow};
pub use objective::{
    composite_objective, synthetic_latent_objective, ComponentScores, LatentObjective, DEFAULT_BUMPS,
    DEFAULT_BUMP_WIDTH, DEFAULT_NOISE_STD,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::LabeledLatentPoint;
use crate::engine::{BoConfig, Evaluation, Problem};
use crate::rng::{sub_rng, sub_seed};
use crate::smiles::{is_drug_like, label_latent_point};
use crate::{BoundedBox, LatentPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestbedError {
    #[error("invalid testbed configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestbedConfig {
    pub dim: usize,
    pub n_anchors: usize,
    /// Anchors are drawn from `N(0, anchor_std^2)` per coordinate.
    pub anchor_std: f64,
    /// The design space is `[-half_width, half_width]^dim`.
    pub half_width: f64,
    pub validity_lengthscale: f64,
    pub methane_bias: f64,
    pub decode_attempts: usize,
    pub label_threshold: f64,
    /// Uniform points decoded and labelled before the first iteration.
    pub negative_points: usize,
    pub bumps: usize,
    pub bump_width: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for TestbedConfig {
    fn default() -> Self {
        Self {
            dim: 56,
            n_anchors: 200,
            anchor_std: 1.0,
            half_width: 3.0,
            validity_lengthscale: 2.5,
            methane_bias: 0.7,
            decode_attempts: 100,
            label_threshold: crate::smiles::DRUG_LIKE_THRESHOLD,
            negative_points: 200,
            bumps: DEFAULT_BUMPS,
            bump_width: DEFAULT_BUMP_WIDTH,
            noise_std: DEFAULT_NOISE_STD,
            seed: 0,
        }
    }
}

impl TestbedConfig {
    /// Eight dimensions with a validity lengthscale of 1, so that uniform
    /// draws over the box mostly decode badly while BO stays affordable.
    pub fn desk_scale() -> Self {
        Self { dim: 8, validity_lengthscale: 1.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), TestbedError> {
        let bad = |m: String| Err(TestbedError::InvalidConfig(m));
        if self.dim == 0 || self.n_anchors == 0 || self.decode_attempts == 0 {
            return bad("dim, n_anchors and decode_attempts must be positive".into());
        }
        for (name, v) in [
            ("anchor_std", self.anchor_std),
            ("half_width", self.half_width),
            ("validity_lengthscale", self.validity_lengthscale),
            ("bump_width", self.bump_width),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.methane_bias) || !(0.0..1.0).contains(&self.label_threshold) {
            return bad("methane_bias must lie in [0, 1] and label_threshold in [0, 1)".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be non-negative, got {}", self.noise_std));
        }
        Ok(())
    }
}

/// Loop settings for BO on the testbed: 10 initial points, 20 iterations of
/// batches of 10, 20 inducing points, and a lighter classifier schedule
/// (30 epochs, minibatches of 50, 10 training draws) for the larger pool.
pub fn testbed_bo_config(seed: u64) -> BoConfig {
    let mut cfg = BoConfig { seed, iterations: 20, batch_size: 10, init_points: 10, ..BoConfig::default() };
    cfg.gp.num_inducing = 20;
    cfg.bnn.train.epochs = 30;
    cfg.bnn.train.minibatch_size = 50;
    cfg.bnn.train.mc_samples = 10;
    cfg
}

/// Uniform points over `bounds`, each labelled by decoding it `attempts`
/// times and applying the drug-like fraction rule.
pub fn generate_negative_class(
    bounds: &BoundedBox,
    n_points: usize,
    attempts: usize,
    dec: &SyntheticDecoder,
    threshold: f64,
    seed: u64,
) -> Vec<LabeledLatentPoint> {
    let mut rng = sub_rng(seed, 0);
    (0..n_points)
        .map(|i| {
            let z = bounds.sample_uniform(&mut rng);
            let outcomes = dec.decode(&z, attempts, sub_seed(seed, 1 + i as u64));
            let label = label_latent_point(&outcomes, threshold);
            LabeledLatentPoint::new(z, label)
        })
        .collect()
}

/// The testbed as a black-box problem: the objective is the negated bump
/// score and the constraint is the drug-like decode rule.
#[derive(Debug, Clone)]
pub struct LatentTestbed {
    config: TestbedConfig,
    bounds: BoundedBox,
    decoder: SyntheticDecoder,
    objective: LatentObjective,
    prior_scored: Vec<(LatentPoint, f64)>,
    prior_labels: Vec<LabeledLatentPoint>,
}

impl LatentTestbed {
    pub fn new(config: &TestbedConfig) -> Result<Self, TestbedError> {
        config.validate()?;
        let c = config;
        let bounds = BoundedBox::cube(c.dim, -c.half_width, c.half_width)
            .map_err(|e| TestbedError::InvalidConfig(e.to_string()))?;
        let mut rng = sub_rng(c.seed, 0);
        let anchors: Vec<LatentPoint> = (0..c.n_anchors)
            .map(|_| (0..c.dim).map(|_| c.anchor_std * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let decoder =
            SyntheticDecoder::new(anchors.clone(), c.validity_lengthscale, c.methane_bias, SyntheticDecoder::default_templates())?;
        let objective = LatentObjective::from_anchors(&anchors, c.bumps, c.bump_width, c.noise_std);

        let score_seed = sub_seed(c.seed, 1);
        let prior_scored = anchors
            .iter()
            .enumerate()
            .map(|(i, z)| (z.clone(), -objective.value(z, Some(sub_seed(score_seed, i as u64)))))
            .collect();
        let label_seed = sub_seed(c.seed, 2);
        let mut prior_labels: Vec<LabeledLatentPoint> = anchors
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let outcomes = decoder.decode(z, c.decode_attempts, sub_seed(label_seed, i as u64));
                LabeledLatentPoint::new(z.clone(), label_latent_point(&outcomes, c.label_threshold))
            })
            .collect();
        prior_labels.extend(generate_negative_class(
            &bounds,
            c.negative_points,
            c.decode_attempts,
            &decoder,
            c.label_threshold,
            sub_seed(c.seed, 3),
        ));
        Ok(Self { config: c.clone(), bounds, decoder, objective, prior_scored, prior_labels })
    }

    pub fn config(&self) -> &TestbedConfig {
        &self.config
    }

    pub fn decoder(&self) -> &SyntheticDecoder {
        &self.decoder
    }

    pub fn objective(&self) -> &LatentObjective {
        &self.objective
    }

    /// Bump score (to be maximized) combined with zero SA and ring terms.
    pub fn score(&self, z: &[f64], seed: Option<u64>) -> f64 {
        composite_objective(ComponentScores { primary: self.objective.value(z, seed), sa: 0.0, ring_penalty: 0.0 })
    }

    /// Mean fraction of drug-like decodings over `points`.
    pub fn drug_like_fraction(&self, points: &[LatentPoint], attempts: usize, seed: u64) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let total: usize = points
            .iter()
            .enumerate()
            .map(|(i, z)| {
                self.decoder.decode(z, attempts, sub_seed(seed, i as u64)).iter().filter(|s| is_drug_like(s)).count()
            })
            .sum();
        total as f64 / (points.len() * attempts) as f64
    }
}

impl Problem for LatentTestbed {
    fn bounds(&self) -> BoundedBox {
        self.bounds.clone()
    }

    fn evaluate(&self, z: &[f64], seed: u64) -> Result<Evaluation, String> {
        let outcomes = self.decoder.decode(z, self.config.decode_attempts, seed);
        let constraint_satisfied = label_latent_point(&outcomes, self.config.label_threshold);
        let objective = -self.score(z, Some(sub_seed(seed, 1)));
        Ok(Evaluation { objective: Some(objective), constraint_satisfied })
    }

    fn initial_constraint_data(&self) -> Vec<LabeledLatentPoint> {
        self.prior_labels.clone()
    }

    fn initial_objective_data(&self) -> Vec<(LatentPoint, f64)> {
        self.prior_scored.clone()
    }
}
