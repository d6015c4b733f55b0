use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GpError;

/// ARD squared-exponential hyperparameters, stored as logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelHyperparams {
    pub log_lengthscales: Vec<f64>,
    pub log_signal_variance: f64,
}

impl KernelHyperparams {
    pub fn new(lengthscales: &[f64], signal_variance: f64) -> Result<Self, GpError> {
        let hp = Self {
            log_lengthscales: lengthscales.iter().map(|l| l.ln()).collect(),
            log_signal_variance: signal_variance.ln(),
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64) -> Result<Self, GpError> {
        Self::new(&vec![lengthscale; dim], signal_variance)
    }

    pub fn dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }

    pub fn lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|l| l.exp()).collect()
    }

    /// `1 / l_j^2` per dimension.
    pub(crate) fn inv_sq_lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|l| (-2.0 * l).exp()).collect()
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.log_lengthscales.is_empty() {
            return Err(GpError::InvalidParameter("kernel needs at least one lengthscale".into()));
        }
        let ok = |v: f64| v.exp().is_finite() && v.exp() > 0.0;
        if !self.log_lengthscales.iter().all(|&l| ok(l) && ok(-2.0 * l)) || !ok(self.log_signal_variance) {
            return Err(GpError::InvalidParameter("kernel hyperparameters must exponentiate to finite positive values".into()));
        }
        Ok(())
    }
}

/// Cross-covariance `k(X_i, X2_j) = s^2 exp(-0.5 sum_d (x_d - x'_d)^2 / l_d^2)`.
pub fn ard_kernel(x: &DMatrix<f64>, x2: &DMatrix<f64>, hp: &KernelHyperparams) -> Result<DMatrix<f64>, GpError> {
    let d = hp.dim();
    for m in [x, x2] {
        if m.ncols() != d {
            return Err(GpError::DimensionMismatch { expected: d, found: m.ncols() });
        }
    }
    Ok(cross_cov(x, x2, &hp.inv_sq_lengthscales(), hp.signal_variance()))
}

pub(crate) fn cross_cov(x: &DMatrix<f64>, x2: &DMatrix<f64>, inv_sq: &[f64], s2: f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x2.nrows(), |i, j| {
        let mut r2 = 0.0;
        for (k, w) in inv_sq.iter().enumerate() {
            let diff = x[(i, k)] - x2[(j, k)];
            r2 += diff * diff * w;
        }
        s2 * (-0.5 * r2).exp()
    })
}

/// Covariances between one point and each row of `x2`.
pub(crate) fn point_cov(z: &[f64], x2: &DMatrix<f64>, inv_sq: &[f64], s2: f64) -> Vec<f64> {
    (0..x2.nrows())
        .map(|j| {
            let mut r2 = 0.0;
            for (k, w) in inv_sq.iter().enumerate() {
                let diff = z[k] - x2[(j, k)];
                r2 += diff * diff * w;
            }
            s2 * (-0.5 * r2).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp1() -> KernelHyperparams {
        KernelHyperparams::new(&[1.0], 1.0).unwrap()
    }

    #[test]
    fn zero_distance_gives_signal_variance() {
        let x = DMatrix::from_row_slice(1, 1, &[0.3]);
        assert_eq!(ard_kernel(&x, &x, &hp1()).unwrap()[(0, 0)], 1.0);
        let hp = KernelHyperparams::new(&[0.5, 2.0], 2.5).unwrap();
        let x = DMatrix::from_row_slice(1, 2, &[1.0, -4.0]);
        assert!((ard_kernel(&x, &x, &hp).unwrap()[(0, 0)] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn unit_distance_value() {
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let x2 = DMatrix::from_row_slice(1, 1, &[1.0]);
        let k = ard_kernel(&x, &x2, &hp1()).unwrap()[(0, 0)];
        assert!((k - 0.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn far_points_are_uncorrelated() {
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let x2 = DMatrix::from_row_slice(1, 1, &[100.0]);
        assert!(ard_kernel(&x, &x2, &hp1()).unwrap()[(0, 0)] < 1e-300);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        assert!(matches!(ard_kernel(&x, &x, &hp1()), Err(GpError::DimensionMismatch { expected: 1, found: 2 })));
    }

    #[test]
    fn symmetric_and_bounded() {
        let hp = KernelHyperparams::new(&[0.7, 1.3], 1.7).unwrap();
        let x = DMatrix::from_fn(6, 2, |i, j| (i as f64 * 0.37 + j as f64 * 1.1).sin());
        let k = ard_kernel(&x, &x, &hp).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(k[(i, j)], k[(j, i)]);
                assert!(k[(i, j)] > 0.0 && k[(i, j)] <= 1.7 + 1e-15);
            }
        }
    }
}
