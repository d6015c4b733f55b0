use rand::Rng;
use rand_distr::StandardNormal;

use super::TestbedError;
use crate::rng::seeded;
use crate::smiles::check_validity;
use crate::LatentPoint;

const TEMPLATES: &str = include_str!("../../data/templates.txt");

/// The methane analog emitted far from the data.
pub const METHANE: &str = "C";

/// Stochastic decoder whose validity decays with distance to the nearest
/// training anchor: `p_valid(z) = exp(-(d/lambda)^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDecoder {
    anchors: Vec<LatentPoint>,
    lengthscale: f64,
    methane_bias: f64,
    templates: Vec<String>,
}

impl SyntheticDecoder {
    pub fn new(
        anchors: Vec<LatentPoint>,
        lengthscale: f64,
        methane_bias: f64,
        templates: Vec<String>,
    ) -> Result<Self, TestbedError> {
        if anchors.is_empty() {
            return Err(TestbedError::InvalidConfig("decoder needs at least one anchor".into()));
        }
        let d = anchors[0].len();
        if d == 0 || anchors.iter().any(|a| a.len() != d) {
            return Err(TestbedError::InvalidConfig("anchors must share a positive dimension".into()));
        }
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(TestbedError::InvalidConfig(format!("lengthscale must be positive, got {lengthscale}")));
        }
        if !(0.0..=1.0).contains(&methane_bias) {
            return Err(TestbedError::InvalidConfig(format!("methane_bias must lie in [0, 1], got {methane_bias}")));
        }
        if templates.is_empty() {
            return Err(TestbedError::InvalidConfig("template pool is empty".into()));
        }
        if let Some(bad) = templates.iter().find(|t| !check_validity(t).valid) {
            return Err(TestbedError::InvalidConfig(format!("template {bad:?} is not valid")));
        }
        Ok(Self { anchors, lengthscale, methane_bias, templates })
    }

    /// The 50 shipped templates.
    pub fn default_templates() -> Vec<String> {
        TEMPLATES.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].len()
    }

    pub fn anchors(&self) -> &[LatentPoint] {
        &self.anchors
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn templates(&self) -> &[String] {
        &self.templates
    }

    pub fn nearest_anchor_distance(&self, z: &[f64]) -> f64 {
        self.anchors
            .iter()
            .map(|a| a.iter().zip(z).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    pub fn p_valid(&self, z: &[f64]) -> f64 {
        (-(self.nearest_anchor_distance(z) / self.lengthscale).powi(2)).exp()
    }

    /// One string per attempt: a template with probability `p_valid`,
    /// otherwise methane with probability `methane_bias`, otherwise a
    /// corrupted template.
    pub fn decode(&self, z: &[f64], attempts: usize, seed: u64) -> Vec<String> {
        let p = self.p_valid(z);
        let mut rng = seeded(seed);
        (0..attempts)
            .map(|_| {
                let template = &self.templates[rng.random_range(0..self.templates.len())];
                if rng.random::<f64>() < p {
                    template.clone()
                } else if rng.random::<f64>() < self.methane_bias {
                    METHANE.to_string()
                } else {
                    corrupt(template, &mut rng)
                }
            })
            .collect()
    }
}

/// Function form of [`SyntheticDecoder::decode`].
pub fn synth_decode(dec: &SyntheticDecoder, z: &[f64], attempts: usize, seed: u64) -> Vec<String> {
    dec.decode(z, attempts, seed)
}

/// Applies random corruption operators until the string fails the validity
/// check: drop a ring-closure digit, unbalance a parenthesis, insert an
/// illegal character, or truncate.
pub fn corrupt<R: Rng + ?Sized>(s: &str, rng: &mut R) -> String {
    let mut out: Vec<char> = s.chars().collect();
    loop {
        match rng.random_range(0..4) {
            0 => {
                let digits: Vec<usize> = out.iter().enumerate().filter(|(_, c)| c.is_ascii_digit()).map(|(i, _)| i).collect();
                if !digits.is_empty() {
                    out.remove(digits[rng.random_range(0..digits.len())]);
                }
            }
            1 => {
                let parens: Vec<usize> = out.iter().enumerate().filter(|(_, c)| **c == ')').map(|(i, _)| i).collect();
                if parens.is_empty() || rng.random::<bool>() {
                    out.insert(rng.random_range(0..=out.len()), '(');
                } else {
                    out.remove(parens[rng.random_range(0..parens.len())]);
                }
            }
            2 => out.insert(rng.random_range(0..=out.len()), '?'),
            _ => {
                if out.len() > 1 {
                    out.truncate(rng.random_range(1..out.len()));
                }
            }
        }
        let candidate: String = out.iter().collect();
        if !check_validity(&candidate).valid {
            return candidate;
        }
    }
}

/// `z'_i = z_i + eps * |z_i| * g_i` with `g_i` standard normal.
pub fn perturb_training_points(points: &[LatentPoint], noise_fraction: f64, seed: u64) -> Vec<LatentPoint> {
    let mut rng = seeded(seed);
    points
        .iter()
        .map(|z| {
            z.iter()
                .map(|&x| {
                    let g: f64 = rng.sample(StandardNormal);
                    x + noise_fraction * x.abs() * g
                })
                .collect()
        })
        .collect()
}
