use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize_projected_lbfgs, LbfgsStatus};
use super::{acquisition_value, acquisition_value_with_grad, AcquisitionError, ConstraintSurrogate, Incumbent, ObjectiveSurrogate};
use crate::rng::sub_rng;
use crate::{BoundedBox, LatentPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub bounds: BoundedBox,
    pub restarts: usize,
    pub max_quasi_newton_steps: usize,
    pub convergence_tolerance: f64,
    pub seed: u64,
    /// Size of the uniform pool scored before the restarts; the best
    /// `restarts` pool points become the starting points.
    #[serde(default = "default_screen_samples")]
    pub screen_samples: usize,
}

fn default_screen_samples() -> usize {
    500
}

impl AcquisitionConfig {
    pub fn new(bounds: BoundedBox, seed: u64) -> Self {
        Self {
            bounds,
            restarts: 10,
            max_quasi_newton_steps: 100,
            convergence_tolerance: 1e-9,
            seed,
            screen_samples: default_screen_samples(),
        }
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        let bad = |m: &str| Err(AcquisitionError::InvalidConfig(m.into()));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.max_quasi_newton_steps == 0 {
            return bad("max_quasi_newton_steps must be positive");
        }
        if !(self.convergence_tolerance > 0.0) {
            return bad("convergence_tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionResult {
    pub point: LatentPoint,
    pub value: f64,
    /// Every restart failed its line search from the start; `point` is then
    /// the best starting point.
    pub degraded: bool,
}

/// Maximizes the acquisition over the box with projected L-BFGS from several
/// starts.
///
/// A seeded uniform pool of `screen_samples` points is scored and the
/// `restarts` best (ties to the lower pool index) start the quasi-Newton
/// runs, so raising `restarts` only adds runs. If `restarts` exceeds the pool
/// the remaining starts are drawn uniformly from a second stream. The best
/// run wins, ties going to the lowest restart index.
pub fn optimize_acquisition<G, C>(
    gp: &G,
    cbnn: &C,
    incumbent: &Incumbent,
    cfg: &AcquisitionConfig,
) -> Result<AcquisitionResult, AcquisitionError>
where
    G: ObjectiveSurrogate + ?Sized,
    C: ConstraintSurrogate + ?Sized,
{
    cfg.validate()?;
    let bounds = &cfg.bounds;
    if bounds.dim() != gp.dim() {
        return Err(AcquisitionError::DimensionMismatch { expected: gp.dim(), found: bounds.dim() });
    }
    let mut rng = sub_rng(cfg.seed, 0);
    let pool: Vec<LatentPoint> = (0..cfg.screen_samples).map(|_| bounds.sample_uniform(&mut rng)).collect();
    let mut scored = Vec::with_capacity(pool.len());
    for (i, z) in pool.iter().enumerate() {
        let v = acquisition_value(z, gp, cbnn, incumbent)?;
        scored.push((if v.is_finite() { v } else { f64::NEG_INFINITY }, i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut starts: Vec<LatentPoint> = scored.iter().take(cfg.restarts).map(|&(_, i)| pool[i].clone()).collect();
    let mut extra = sub_rng(cfg.seed, 1);
    while starts.len() < cfg.restarts {
        starts.push(bounds.sample_uniform(&mut extra));
    }

    let objective = |z: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (v, g) = acquisition_value_with_grad(z, gp, cbnn, incumbent).ok()?;
        if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some((-v, g.into_iter().map(|x| -x).collect()))
    };

    let mut best: Option<(f64, LatentPoint)> = None;
    let mut fallback: Option<(f64, LatentPoint)> = None;
    let mut any_ok = false;
    for start in &starts {
        let out = minimize_projected_lbfgs(objective, start, bounds, cfg.max_quasi_newton_steps, cfg.convergence_tolerance);
        let failed = out.status == LbfgsStatus::LineSearchFailed && out.accepted_steps == 0;
        let value = -out.value;
        if !value.is_finite() {
            continue;
        }
        if failed {
            if fallback.as_ref().is_none_or(|(v, _)| value > *v) {
                fallback = Some((value, out.x));
            }
            continue;
        }
        any_ok = true;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, out.x));
        }
    }
    match (best, fallback) {
        (Some((value, point)), _) => Ok(AcquisitionResult { point, value, degraded: !any_ok }),
        (None, Some((value, point))) => Ok(AcquisitionResult { point, value, degraded: true }),
        (None, None) => {
            let point = starts.swap_remove(0);
            let value = acquisition_value(&point, gp, cbnn, incumbent)?;
            Ok(AcquisitionResult { point, value, degraded: true })
        }
    }
}
