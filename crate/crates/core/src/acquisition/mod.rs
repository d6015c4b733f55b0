//! Expected improvement, its constrained variant, incumbent selection and
//! multi-start maximization over a box.
//!
//! Everything is phrased for minimization: improvement means going below the
//! incumbent `eta`.

mod ei;
mod lbfgs;
mod optimize;
mod surrogate;

pub use ei::{eic, expected_improvement, expected_improvement_with_grad};
pub use lbfgs::{minimize_projected_lbfgs, LbfgsOutcome, LbfgsStatus};
pub use optimize::{optimize_acquisition, AcquisitionConfig, AcquisitionResult};
pub use surrogate::{ConstraintSurrogate, ObjectiveSurrogate, Unconstrained};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::GpError;
use crate::LatentPoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcquisitionError {
    #[error("invalid acquisition configuration: {0}")]
    InvalidConfig(String),
    #[error("point has {found} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("objective model: {0}")]
    Model(#[from] GpError),
}

/// The requirement `Pr(C(z)) >= 1 - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilisticConstraintSpec {
    pub delta: f64,
}

impl Default for ProbabilisticConstraintSpec {
    fn default() -> Self {
        Self { delta: 0.05 }
    }
}

impl ProbabilisticConstraintSpec {
    pub fn new(delta: f64) -> Result<Self, AcquisitionError> {
        let spec = Self { delta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.delta > 0.0 && self.delta < 1.0 {
            Ok(())
        } else {
            Err(AcquisitionError::InvalidConfig(format!("delta must lie in (0, 1), got {}", self.delta)))
        }
    }

    pub fn is_confident(&self, prob: f64) -> bool {
        prob >= 1.0 - self.delta
    }
}

/// Reference value for improvement. `eta` is `None` exactly when no candidate
/// has been certified feasible yet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub eta: Option<f64>,
}

impl Incumbent {
    pub fn infeasible() -> Self {
        Self { eta: None }
    }

    pub fn feasible(eta: f64) -> Self {
        Self { eta: Some(eta) }
    }

    pub fn feasible_found(&self) -> bool {
        self.eta.is_some()
    }
}

/// Lowest posterior mean among candidates whose constraint probability
/// reaches `1 - delta`.
pub fn select_incumbent<G, C>(
    gp: &G,
    cbnn: &C,
    candidates: &[LatentPoint],
    spec: &ProbabilisticConstraintSpec,
) -> Result<Incumbent, AcquisitionError>
where
    G: ObjectiveSurrogate + ?Sized,
    C: ConstraintSurrogate + ?Sized,
{
    let mut eta: Option<f64> = None;
    for z in candidates {
        check_dim(gp.dim(), z)?;
        if !spec.is_confident(cbnn.prob(z)) {
            continue;
        }
        let mean = gp.predict_point(z)?.mean;
        if eta.is_none_or(|e| mean < e) {
            eta = Some(mean);
        }
    }
    Ok(Incumbent { eta })
}

/// EIC once a feasible incumbent exists, the constraint probability alone
/// before that.
pub fn acquisition_value<G, C>(z: &[f64], gp: &G, cbnn: &C, incumbent: &Incumbent) -> Result<f64, AcquisitionError>
where
    G: ObjectiveSurrogate + ?Sized,
    C: ConstraintSurrogate + ?Sized,
{
    check_dim(gp.dim(), z)?;
    let prob = cbnn.prob(z);
    match incumbent.eta {
        None => Ok(prob),
        Some(eta) => {
            let p = gp.predict_point(z)?;
            Ok(eic(expected_improvement(p.mean, p.latent_variance.sqrt(), eta), prob))
        }
    }
}

/// [`acquisition_value`] with its gradient w.r.t. `z`.
pub fn acquisition_value_with_grad<G, C>(
    z: &[f64],
    gp: &G,
    cbnn: &C,
    incumbent: &Incumbent,
) -> Result<(f64, Vec<f64>), AcquisitionError>
where
    G: ObjectiveSurrogate + ?Sized,
    C: ConstraintSurrogate + ?Sized,
{
    check_dim(gp.dim(), z)?;
    let (prob, d_prob) = cbnn.prob_with_grad(z);
    let Some(eta) = incumbent.eta else {
        return Ok((prob, d_prob));
    };
    let p = gp.predict_point(z)?;
    let (ei, d_ei) = expected_improvement_with_grad(&p, eta);
    let grad = d_ei.iter().zip(&d_prob).map(|(de, dp)| de * prob + ei * dp).collect();
    Ok((ei * prob, grad))
}

fn check_dim(expected: usize, z: &[f64]) -> Result<(), AcquisitionError> {
    if z.len() == expected {
        Ok(())
    } else {
        Err(AcquisitionError::DimensionMismatch { expected, found: z.len() })
    }
}
