use rand::Rng;
use rand_distr::StandardNormal;

use super::network::{backward, forward, Workspace};
use super::train::{AlphaTrainConfig, Divergence};
use super::{ConstraintError, LabeledLatentPoint, WeightPosterior};
use crate::rng::seeded;

/// Standard-normal draws, one row per Monte Carlo sample. Reusing the same
/// draws across evaluations gives common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraws {
    pub eps: Vec<Vec<f64>>,
}

impl NoiseDraws {
    pub fn sample<R: Rng + ?Sized>(n_params: usize, mc_samples: usize, rng: &mut R) -> Self {
        let eps = (0..mc_samples).map(|_| (0..n_params).map(|_| rng.sample(StandardNormal)).collect()).collect();
        Self { eps }
    }

    pub fn from_seed(n_params: usize, mc_samples: usize, seed: u64) -> Self {
        Self::sample(n_params, mc_samples, &mut seeded(seed))
    }
}

fn log_sigmoid(x: f64) -> f64 {
    // -softplus(-x)
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Black-box alpha energy on a minibatch, drawing fresh noise from `cfg.seed`.
pub fn alpha_energy(
    post: &WeightPosterior,
    batch: &[LabeledLatentPoint],
    cfg: &AlphaTrainConfig,
    n_total: usize,
) -> Result<f64, ConstraintError> {
    let draws = NoiseDraws::from_seed(post.num_params(), cfg.mc_samples, cfg.seed);
    alpha_energy_with_draws(post, batch, cfg, n_total, &draws)
}

pub fn alpha_energy_with_draws(
    post: &WeightPosterior,
    batch: &[LabeledLatentPoint],
    cfg: &AlphaTrainConfig,
    n_total: usize,
    draws: &NoiseDraws,
) -> Result<f64, ConstraintError> {
    evaluate(post, batch, cfg, n_total, draws, false).map(|(v, _)| v)
}

/// Energy and its gradient: derivatives w.r.t. the means followed by
/// derivatives w.r.t. the log-variances.
pub fn alpha_energy_with_gradient(
    post: &WeightPosterior,
    batch: &[LabeledLatentPoint],
    cfg: &AlphaTrainConfig,
    n_total: usize,
    draws: &NoiseDraws,
) -> Result<(f64, Vec<f64>), ConstraintError> {
    evaluate(post, batch, cfg, n_total, draws, true).map(|(v, g)| (v, g.unwrap()))
}

/// With `w_k = m + s * eps_k`, prior `N(0, v0)` and `N` training points, the
/// energy is
///
/// ```text
/// E = sum_i 0.5 ln(v0 / v_i)
///     - N / (alpha B) * sum_{n in batch} ln mean_k exp(alpha (ln p(y_n | w_k) - ln f_k))
/// ln f_k = (1/N) sum_i (w_ik^2 / (2 v0) - eps_ik^2 / 2)
/// ```
///
/// which is the tied-factor energy after the `m^2 / v` terms of the
/// normalizers and the site factors cancel analytically. The mean-field
/// variant is `KL(q || p) - N / B * sum_n mean_k ln p(y_n | w_k)`.
fn evaluate(
    post: &WeightPosterior,
    batch: &[LabeledLatentPoint],
    cfg: &AlphaTrainConfig,
    n_total: usize,
    draws: &NoiseDraws,
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>), ConstraintError> {
    let arch = &post.architecture;
    let d = arch.input_dim();
    if batch.is_empty() {
        return Err(ConstraintError::InvalidConfig("empty minibatch".into()));
    }
    if n_total < batch.len() {
        return Err(ConstraintError::InvalidConfig("n_total is smaller than the minibatch".into()));
    }
    if draws.eps.is_empty() {
        return Err(ConstraintError::InvalidConfig("at least one Monte Carlo draw is required".into()));
    }
    if let Some(bad) = batch.iter().find(|p| p.z.len() != d) {
        return Err(ConstraintError::DimensionMismatch { expected: d, found: bad.z.len() });
    }
    let n_w = post.num_params();
    let k_count = draws.eps.len();
    let b = batch.len() as f64;
    let n = n_total as f64;
    let v0 = cfg.prior_variance;
    let alpha = cfg.alpha;

    let weights: Vec<Vec<f64>> = draws
        .eps
        .iter()
        .map(|eps| {
            let mut w = vec![0.0; n_w];
            post.reparameterize(eps, &mut w);
            w
        })
        .collect();

    let mut ws = Workspace::new(arch);
    // loglik[k][n]
    let loglik: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| {
            batch
                .iter()
                .map(|p| {
                    let o = forward(arch, w, &p.z, &mut ws);
                    log_sigmoid(if p.label { o } else { -o })
                })
                .collect()
        })
        .collect();

    // responsibilities r[k][n] over draws for each batch point
    let mut resp = vec![vec![1.0 / k_count as f64; batch.len()]; k_count];
    let value = match cfg.divergence {
        Divergence::BlackBoxAlpha => {
            let log_f: Vec<f64> = weights
                .iter()
                .zip(&draws.eps)
                .map(|(w, eps)| {
                    w.iter().zip(eps).map(|(wi, ei)| wi * wi / (2.0 * v0) - 0.5 * ei * ei).sum::<f64>() / n
                })
                .collect();
            let mut data_term = 0.0;
            let mut a = vec![0.0; k_count];
            for j in 0..batch.len() {
                for k in 0..k_count {
                    a[k] = alpha * (loglik[k][j] - log_f[k]);
                }
                let lse = logsumexp(&a);
                data_term += lse - (k_count as f64).ln();
                for k in 0..k_count {
                    resp[k][j] = (a[k] - lse).exp();
                }
            }
            let entropy_term: f64 = post.log_variances.iter().map(|lv| 0.5 * (v0.ln() - lv)).sum();
            entropy_term - n / (alpha * b) * data_term
        }
        Divergence::MeanFieldVb => {
            let kl: f64 = post
                .means
                .iter()
                .zip(&post.log_variances)
                .map(|(m, lv)| 0.5 * ((v0.ln() - lv) + (lv.exp() + m * m) / v0 - 1.0))
                .sum();
            let expected: f64 = loglik.iter().flatten().sum::<f64>() / k_count as f64;
            kl - n / b * expected
        }
    };
    if !value.is_finite() {
        return Err(ConstraintError::NumericalFailure);
    }
    if !want_grad {
        return Ok((value, None));
    }

    let mut grad = vec![0.0; 2 * n_w];
    let mut gw = vec![0.0; n_w];
    for (k, w) in weights.iter().enumerate() {
        gw.iter_mut().for_each(|g| *g = 0.0);
        for (j, p) in batch.iter().enumerate() {
            let o = forward(arch, w, &p.z, &mut ws);
            let y = if p.label { 1.0 } else { 0.0 };
            let dll = y - super::posterior::sigmoid(o);
            let coef = -n / b * resp[k][j] * dll;
            if coef != 0.0 {
                backward(arch, w, coef, &mut ws, Some(&mut gw), None);
            }
        }
        if cfg.divergence == Divergence::BlackBoxAlpha {
            let r_k: f64 = resp[k].iter().sum();
            for (g, wi) in gw.iter_mut().zip(w) {
                *g += r_k / b * wi / v0;
            }
        }
        let eps = &draws.eps[k];
        for i in 0..n_w {
            grad[i] += gw[i];
            let sd = (0.5 * post.log_variances[i]).exp();
            grad[n_w + i] += gw[i] * sd * eps[i] * 0.5;
        }
    }
    match cfg.divergence {
        Divergence::BlackBoxAlpha => {
            for g in &mut grad[n_w..] {
                *g -= 0.5;
            }
        }
        Divergence::MeanFieldVb => {
            for i in 0..n_w {
                grad[i] += post.means[i] / v0;
                grad[n_w + i] += 0.5 * (post.log_variances[i].exp() / v0 - 1.0);
            }
        }
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(ConstraintError::NumericalFailure);
    }
    Ok((value, Some(grad)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
    }

    #[test]
    fn logsumexp_handles_large_values() {
        let v = [1000.0, 1000.0];
        assert!((logsumexp(&v) - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
    }
}
