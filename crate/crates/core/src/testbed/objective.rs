use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::LatentPoint;

/// Opaque per-molecule scores combined by [`composite_objective`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    /// logP or QED.
    pub primary: f64,
    pub sa: f64,
    pub ring_penalty: f64,
}

pub fn composite_objective(c: ComponentScores) -> f64 {
    c.primary - c.sa - c.ring_penalty
}

/// Sum of isotropic Gaussian bumps plus optional evaluation noise; the
/// score is to be maximized and decays to 0 away from the centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentObjective {
    pub centers: Vec<LatentPoint>,
    pub heights: Vec<f64>,
    pub width: f64,
    pub noise_std: f64,
}

/// Bumps placed on the first anchors.
pub const DEFAULT_BUMPS: usize = 3;
pub const DEFAULT_BUMP_WIDTH: f64 = 1.0;
pub const DEFAULT_NOISE_STD: f64 = 0.01;

impl LatentObjective {
    /// Bumps on the first `n_bumps` anchors with heights `1, 1/2, 1/3, ...`.
    pub fn from_anchors(anchors: &[LatentPoint], n_bumps: usize, width: f64, noise_std: f64) -> Self {
        let centers: Vec<LatentPoint> = anchors.iter().take(n_bumps).cloned().collect();
        let heights = (0..centers.len()).map(|j| 1.0 / (j + 1) as f64).collect();
        Self { centers, heights, width, noise_std }
    }

    pub fn mean(&self, z: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.heights)
            .map(|(c, h)| {
                let r2: f64 = c.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
                h * (-0.5 * r2 / (self.width * self.width)).exp()
            })
            .sum()
    }

    /// `seed = None` turns the noise off.
    pub fn value(&self, z: &[f64], seed: Option<u64>) -> f64 {
        let noise = match seed {
            Some(s) => self.noise_std * seeded(s).sample::<f64, _>(StandardNormal),
            None => 0.0,
        };
        self.mean(z) + noise
    }
}

/// [`LatentObjective::from_anchors`] with the default bumps, evaluated at `z`.
pub fn synthetic_latent_objective(z: &[f64], anchors: &[LatentPoint], seed: Option<u64>) -> f64 {
    LatentObjective::from_anchors(anchors, DEFAULT_BUMPS, DEFAULT_BUMP_WIDTH, DEFAULT_NOISE_STD).value(z, seed)
}
