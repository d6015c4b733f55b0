use statrs::function::erf::erfc;

use crate::gp::PointPrediction;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `E[max(0, eta - f)]` for `f ~ N(mean, std^2)`.
pub fn expected_improvement(mean: f64, std: f64, eta: f64) -> f64 {
    let diff = eta - mean;
    if !(std > 0.0) {
        return diff.max(0.0);
    }
    let gamma = diff / std;
    (diff * norm_cdf(gamma) + std * norm_pdf(gamma)).max(0.0)
}

/// EI and its gradient w.r.t. the input, from a point prediction carrying
/// mean and variance gradients.
pub fn expected_improvement_with_grad(p: &PointPrediction, eta: f64) -> (f64, Vec<f64>) {
    let std = p.latent_variance.sqrt();
    let diff = eta - p.mean;
    if std < 1e-12 {
        let grad = if diff > 0.0 { p.d_mean.iter().map(|g| -g).collect() } else { vec![0.0; p.d_mean.len()] };
        return (diff.max(0.0), grad);
    }
    let gamma = diff / std;
    let cdf = norm_cdf(gamma);
    let pdf = norm_pdf(gamma);
    let value = (diff * cdf + std * pdf).max(0.0);
    // dEI/dmean = -Phi, dEI/dstd = phi, dstd = dvar / (2 std)
    let grad = p
        .d_mean
        .iter()
        .zip(&p.d_variance)
        .map(|(dm, dv)| -cdf * dm + pdf * dv / (2.0 * std))
        .collect();
    (value, grad)
}

pub fn eic(ei_value: f64, pr_constraint: f64) -> f64 {
    ei_value * pr_constraint
}
