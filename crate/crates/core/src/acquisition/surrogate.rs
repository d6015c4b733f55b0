use crate::constraint::FrozenBnn;
use crate::gp::{FitcModel, GpError, PointPrediction};

/// Posterior of the objective at a single point.
pub trait ObjectiveSurrogate {
    fn dim(&self) -> usize;
    fn predict_point(&self, z: &[f64]) -> Result<PointPrediction, GpError>;
}

/// Probability that the constraint holds at a point.
pub trait ConstraintSurrogate {
    fn prob(&self, z: &[f64]) -> f64;
    fn prob_with_grad(&self, z: &[f64]) -> (f64, Vec<f64>);
}

impl ObjectiveSurrogate for FitcModel {
    fn dim(&self) -> usize {
        FitcModel::dim(self)
    }

    fn predict_point(&self, z: &[f64]) -> Result<PointPrediction, GpError> {
        FitcModel::predict_point(self, z)
    }
}

impl ConstraintSurrogate for FrozenBnn {
    fn prob(&self, z: &[f64]) -> f64 {
        FrozenBnn::prob(self, z)
    }

    fn prob_with_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        FrozenBnn::prob_with_grad(self, z)
    }
}

/// A constraint satisfied everywhere; turns EIC into plain EI.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

impl ConstraintSurrogate for Unconstrained {
    fn prob(&self, _z: &[f64]) -> f64 {
        1.0
    }

    fn prob_with_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        (1.0, vec![0.0; z.len()])
    }
}

impl<T: ObjectiveSurrogate + ?Sized> ObjectiveSurrogate for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn predict_point(&self, z: &[f64]) -> Result<PointPrediction, GpError> {
        (**self).predict_point(z)
    }
}

impl<T: ConstraintSurrogate + ?Sized> ConstraintSurrogate for &T {
    fn prob(&self, z: &[f64]) -> f64 {
        (**self).prob(z)
    }

    fn prob_with_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        (**self).prob_with_grad(z)
    }
}
