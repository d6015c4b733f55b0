use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;

use crate::acquisition::{ConstraintSurrogate, ObjectiveSurrogate};
use crate::constraint::FrozenBnn;
use crate::gp::{AdamConfig, FitOptions, FitcModel, GpError, KernelHyperparams, PointPrediction};
use crate::rng::seeded;
use crate::{InputScaler, LatentPoint};

/// A FITC model trained on standardized inputs and targets, answering in the
/// original units.
#[derive(Debug, Clone)]
pub struct StandardizedGp {
    model: FitcModel,
    scaler: InputScaler,
    y_mean: f64,
    y_scale: f64,
}

impl StandardizedGp {
    /// Standardizes `(xs, ys)`, initializes inducing points on a seeded
    /// subsample of the inputs and trains with Adam.
    pub fn fit(
        xs: &[LatentPoint],
        ys: &[f64],
        num_inducing: usize,
        jitter: f64,
        adam: &AdamConfig,
        opts: &FitOptions,
        seed: u64,
    ) -> Result<Self, GpError> {
        let n = xs.len();
        if n == 0 || ys.len() != n {
            return Err(GpError::LengthMismatch { what: "targets", expected: n, found: ys.len() });
        }
        let d = xs[0].len();
        let scaler = InputScaler::standardize(xs);
        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 1e-24 { var.sqrt() } else { 1.0 };
        let x = DMatrix::from_fn(n, d, |i, j| scaler.apply(&xs[i])[j]);
        let y = DVector::from_iterator(n, ys.iter().map(|v| (v - y_mean) / y_scale));
        let m = num_inducing.clamp(1, n);
        let mut rows = sample(&mut seeded(seed), n, m).into_vec();
        rows.sort_unstable();
        let init = FitcModel::new(KernelHyperparams::isotropic(d, 1.0, 1.0)?, x.select_rows(&rows), 0.01, jitter)?;
        let adam = AdamConfig { minibatch_size: adam.minibatch_size.min(n), ..adam.clone() };
        let model = init.fit(&x, &y, &adam, opts)?;
        Ok(Self { model, scaler, y_mean, y_scale })
    }

    pub fn model(&self) -> &FitcModel {
        &self.model
    }

    /// Inducing locations mapped back to the design space.
    pub fn inducing_points(&self) -> Vec<LatentPoint> {
        let u = self.model.inducing_locations();
        (0..u.nrows()).map(|i| self.scaler.invert(&u.row(i).iter().copied().collect::<Vec<_>>())).collect()
    }

    /// A copy that also believes `y` was observed at `z`, with `z` joining
    /// the inducing set; hyperparameters are kept.
    pub fn with_extra_observation(&self, z: &[f64], y: f64) -> Result<Self, GpError> {
        let model = self.model.with_extra_inducing_observation(&self.scaler.apply(z), (y - self.y_mean) / self.y_scale)?;
        Ok(Self { model, ..self.clone() })
    }
}

impl ObjectiveSurrogate for StandardizedGp {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn predict_point(&self, z: &[f64]) -> Result<PointPrediction, GpError> {
        let p = self.model.predict_point(&self.scaler.apply(z))?;
        let s = self.y_scale;
        let mut d_mean: Vec<f64> = p.d_mean.iter().map(|g| g * s).collect();
        let mut d_variance: Vec<f64> = p.d_variance.iter().map(|g| g * s * s).collect();
        self.scaler.pull_back(&mut d_mean);
        self.scaler.pull_back(&mut d_variance);
        Ok(PointPrediction { mean: self.y_mean + s * p.mean, latent_variance: s * s * p.latent_variance, d_mean, d_variance })
    }
}

/// A frozen BNN fed through an input scaler.
#[derive(Debug, Clone)]
pub struct ScaledConstraint {
    pub bnn: FrozenBnn,
    pub scaler: InputScaler,
}

impl ConstraintSurrogate for ScaledConstraint {
    fn prob(&self, z: &[f64]) -> f64 {
        self.bnn.prob(&self.scaler.apply(z))
    }

    fn prob_with_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let (p, mut g) = self.bnn.prob_with_grad(&self.scaler.apply(z));
        self.scaler.pull_back(&mut g);
        (p, g)
    }
}

/// The same probability everywhere; stands in for the classifier while the
/// labels seen so far contain a single class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProbability(pub f64);

impl ConstraintSurrogate for ConstantProbability {
    fn prob(&self, _z: &[f64]) -> f64 {
        self.0
    }

    fn prob_with_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        (self.0, vec![0.0; z.len()])
    }
}
