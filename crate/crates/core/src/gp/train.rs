use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FitcModel, GpError};
use crate::adam::Adam;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 0.005, epochs: 400, minibatch_size: 5, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, seed: 0 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        if !(self.learning_rate > 0.0) {
            return Err(GpError::InvalidParameter("learning_rate must be positive".into()));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(GpError::InvalidParameter("beta1 and beta2 must lie in (0, 1)".into()));
        }
        if self.minibatch_size == 0 {
            return Err(GpError::InvalidParameter("minibatch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Training switches not covered by the optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Train the inducing locations jointly with the hyperparameters.
    pub optimize_inducing: bool,
    /// Floor applied to the noise variance after every step.
    pub min_noise_variance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { optimize_inducing: true, min_noise_variance: 1e-6 }
    }
}

impl FitcModel {
    /// Minibatch Adam on the FITC negative log marginal likelihood.
    ///
    /// Each epoch visits a fresh seeded permutation of the data in minibatches
    /// (the last one may be short); a minibatch's NLML is rescaled by
    /// `n / batch_len`. After every epoch the full-data NLML is evaluated and
    /// the best parameters seen, the initial ones included, are returned
    /// conditioned on `(x, y)`.
    pub fn fit(
        &self,
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        cfg: &AdamConfig,
        opts: &FitOptions,
    ) -> Result<FitcModel, GpError> {
        cfg.validate()?;
        let n = x.nrows();
        if n < cfg.minibatch_size {
            return Err(GpError::InvalidParameter(format!(
                "need at least minibatch_size = {} observations, got {n}",
                cfg.minibatch_size
            )));
        }
        let d = self.dim();
        let log_floor = opts.min_noise_variance.ln();
        let mut params = self.params();
        let mut best_params = params.clone();
        let mut best_value = self.negative_log_marginal(x, y)?;
        if !best_value.is_finite() {
            return Err(GpError::TrainingDiverged { epoch: 0 });
        }
        if cfg.epochs == 0 {
            return self.with_params(&best_params)?.conditioned(x, y);
        }

        let mut adam = Adam::new(params.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
        let mut rng = seeded(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.minibatch_size) {
                let xb = x.select_rows(batch);
                let yb = y.select_rows(batch);
                let model = self.with_params(&params).map_err(|_| GpError::TrainingDiverged { epoch })?;
                let (value, grad) = model
                    .negative_log_marginal_with_gradient(&xb, &yb)
                    .map_err(|_| GpError::TrainingDiverged { epoch })?;
                let scale = n as f64 / batch.len() as f64;
                let mut g = grad.to_vec();
                if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
                    return Err(GpError::TrainingDiverged { epoch });
                }
                g.iter_mut().for_each(|v| *v *= scale);
                if !opts.optimize_inducing {
                    g[d + 2..].iter_mut().for_each(|v| *v = 0.0);
                }
                adam.step(&mut params, &g);
                if params[d + 1] < log_floor {
                    params[d + 1] = log_floor;
                }
            }
            let full = self
                .with_params(&params)
                .and_then(|m| m.negative_log_marginal(x, y))
                .map_err(|_| GpError::TrainingDiverged { epoch })?;
            if !full.is_finite() {
                return Err(GpError::TrainingDiverged { epoch });
            }
            if full < best_value {
                best_value = full;
                best_params.clone_from(&params);
            }
        }
        self.with_params(&best_params)?.conditioned(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelHyperparams;

    fn smooth_data(n: usize) -> (DMatrix<f64>, DVector<f64>) {
        let x = DMatrix::from_fn(n, 1, |i, _| -3.0 + 6.0 * i as f64 / (n - 1) as f64);
        let y = DVector::from_fn(n, |i, _| (x[(i, 0)]).sin() + 0.3 * x[(i, 0)]);
        (x, y)
    }

    fn init_model(x: &DMatrix<f64>, m: usize) -> FitcModel {
        let step = x.nrows() / m;
        let rows: Vec<usize> = (0..m).map(|i| i * step).collect();
        FitcModel::new(KernelHyperparams::new(&[1.0], 1.0).unwrap(), x.select_rows(&rows), 0.1, 1e-5).unwrap()
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let (x, y) = smooth_data(25);
        let model = init_model(&x, 5);
        let cfg = AdamConfig { epochs: 0, ..AdamConfig::default() };
        let fitted = model.fit(&x, &y, &cfg, &FitOptions::default()).unwrap();
        assert_eq!(fitted.params(), model.params());
        assert!(fitted.is_conditioned());
    }

    #[test]
    fn training_decreases_nlml() {
        let (x, y) = smooth_data(25);
        let model = init_model(&x, 5);
        let before = model.negative_log_marginal(&x, &y).unwrap();
        let fitted = model.fit(&x, &y, &AdamConfig::default(), &FitOptions::default()).unwrap();
        let after = fitted.negative_log_marginal(&x, &y).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn training_is_bit_reproducible() {
        let (x, y) = smooth_data(25);
        let model = init_model(&x, 5);
        let cfg = AdamConfig { epochs: 50, seed: 11, ..AdamConfig::default() };
        let a = model.fit(&x, &y, &cfg, &FitOptions::default()).unwrap();
        let b = model.fit(&x, &y, &cfg, &FitOptions::default()).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn frozen_inducing_locations_stay_put() {
        let (x, y) = smooth_data(25);
        let model = init_model(&x, 5);
        let opts = FitOptions { optimize_inducing: false, ..FitOptions::default() };
        let cfg = AdamConfig { epochs: 30, ..AdamConfig::default() };
        let fitted = model.fit(&x, &y, &cfg, &opts).unwrap();
        assert_eq!(fitted.inducing_locations(), model.inducing_locations());
    }

    #[test]
    fn too_few_points_for_a_minibatch() {
        let (x, y) = smooth_data(4);
        let model = init_model(&x, 2);
        assert!(model.fit(&x, &y, &AdamConfig::default(), &FitOptions::default()).is_err());
    }
}
