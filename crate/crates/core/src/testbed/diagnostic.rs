use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::decoder::{perturb_training_points, SyntheticDecoder, METHANE};
use super::TestbedError;
use crate::rng::{sub_rng, sub_seed};
use crate::smiles::{check_validity, is_drug_like};
use crate::{BoundedBox, LatentPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticConfig {
    pub points_per_group: usize,
    pub decode_attempts: usize,
    /// Relative noise levels of the perturbed groups, in order.
    pub noise_levels: Vec<f64>,
    pub seed: u64,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        Self { points_per_group: 50, decode_attempts: 500, noise_levels: vec![0.01, 0.1, 0.5], seed: 0 }
    }
}

impl DiagnosticConfig {
    pub fn validate(&self) -> Result<(), TestbedError> {
        if self.points_per_group == 0 || self.decode_attempts == 0 {
            return Err(TestbedError::InvalidConfig("points_per_group and decode_attempts must be positive".into()));
        }
        if self.noise_levels.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(TestbedError::InvalidConfig("noise levels must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Group names in table order.
    pub fn group_names(&self) -> Vec<String> {
        let mut names = vec!["train".to_string()];
        names.extend(self.noise_levels.iter().map(|e| format!("noise_{e}")));
        names.push("random".into());
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub group: String,
    pub pct_valid: f64,
    pub pct_methane: f64,
    pub pct_druglike: f64,
}

/// Decodes disjoint groups of points: unperturbed anchors, anchors with each
/// relative noise level, and uniform draws over `bounds`.
pub fn diagnostic_experiment(
    dec: &SyntheticDecoder,
    bounds: &BoundedBox,
    cfg: &DiagnosticConfig,
) -> Result<Vec<DiagnosticRow>, TestbedError> {
    cfg.validate()?;
    let n = cfg.points_per_group;
    let needed = n * (1 + cfg.noise_levels.len());
    if dec.anchors().len() < needed {
        return Err(TestbedError::InvalidConfig(format!(
            "{} anchors cannot fill {} disjoint groups of {n}",
            dec.anchors().len(),
            1 + cfg.noise_levels.len()
        )));
    }
    if bounds.dim() != dec.dim() {
        return Err(TestbedError::InvalidConfig("bounds and anchors differ in dimension".into()));
    }

    let mut groups: Vec<Vec<LatentPoint>> = vec![dec.anchors()[..n].to_vec()];
    for (k, &eps) in cfg.noise_levels.iter().enumerate() {
        let slice = &dec.anchors()[n * (k + 1)..n * (k + 2)];
        groups.push(perturb_training_points(slice, eps, sub_seed(cfg.seed, k as u64)));
    }
    let mut rng = sub_rng(cfg.seed, 100);
    groups.push((0..n).map(|_| bounds.sample_uniform(&mut rng)).collect());

    let mut memo: HashMap<String, (bool, bool)> = HashMap::new();
    let rows = groups
        .iter()
        .zip(cfg.group_names())
        .enumerate()
        .map(|(g, (points, group))| {
            let (mut valid, mut methane, mut drug) = (0usize, 0usize, 0usize);
            let group_seed = sub_seed(cfg.seed, 200 + g as u64);
            for (i, z) in points.iter().enumerate() {
                for s in dec.decode(z, cfg.decode_attempts, sub_seed(group_seed, i as u64)) {
                    let (v, d) = *memo.entry(s.clone()).or_insert_with(|| (check_validity(&s).valid, is_drug_like(&s)));
                    valid += usize::from(v);
                    drug += usize::from(d);
                    methane += usize::from(s == METHANE);
                }
            }
            let total = (points.len() * cfg.decode_attempts) as f64;
            DiagnosticRow {
                group,
                pct_valid: 100.0 * valid as f64 / total,
                pct_methane: 100.0 * methane as f64 / total,
                pct_druglike: 100.0 * drug as f64 / total,
            }
        })
        .collect();
    Ok(rows)
}

/// Columns `group,pct_valid,pct_methane,pct_druglike`.
pub fn write_diagnostic_csv<W: Write>(rows: &[DiagnosticRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
