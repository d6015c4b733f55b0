use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{cross_cov, point_cov, KernelHyperparams};
use super::GpError;

/// Sparse GP with the fully independent training conditional approximation.
///
/// The prior covariance of the training targets is
/// `Q_ff + diag(K_ff - Q_ff) + noise * I` with `Q_ff = K_fu (K_uu + jitter I)^-1 K_uf`.
/// A model carries its parameters and, once [`condition`](Self::condition)ed
/// on data, the factorization needed to serve predictions. Any parameter
/// change goes through a constructor that drops the factorization.
#[derive(Debug, Clone)]
pub struct FitcModel {
    kernel: KernelHyperparams,
    inducing: DMatrix<f64>,
    log_noise_variance: f64,
    jitter: f64,
    state: Option<Posterior>,
}

/// Cached predictive quantities for one conditioning data set.
#[derive(Debug, Clone)]
struct Posterior {
    x: DMatrix<f64>,
    y: DVector<f64>,
    /// `A^-1 K_uf Lambda^-1 y`, so the predictive mean is `k_u(z) . weights`.
    weights: DVector<f64>,
    /// `K_uu^-1 - A^-1`, so the latent variance is `s^2 - k_u(z)' P k_u(z)`.
    var_reduction: DMatrix<f64>,
}

/// Batch prediction. Latent variance excludes observation noise, which is
/// reported once in `noise_variance`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpPrediction {
    pub mean: Vec<f64>,
    pub latent_variance: Vec<f64>,
    pub noise_variance: f64,
}

/// Prediction at a single point together with gradients w.r.t. the point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPrediction {
    pub mean: f64,
    pub latent_variance: f64,
    pub d_mean: Vec<f64>,
    pub d_variance: Vec<f64>,
}

/// Gradient of the negative log marginal likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct FitcGradient {
    pub log_lengthscales: Vec<f64>,
    pub log_signal_variance: f64,
    pub log_noise_variance: f64,
    /// Same shape as the inducing locations.
    pub inducing: DMatrix<f64>,
}

impl FitcGradient {
    /// Flattened in the order of [`FitcModel::params`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.log_lengthscales.clone();
        v.push(self.log_signal_variance);
        v.push(self.log_noise_variance);
        for i in 0..self.inducing.nrows() {
            v.extend(self.inducing.row(i).iter());
        }
        v
    }
}

/// Intermediate matrices shared by the likelihood, its gradient and the posterior.
struct Factors {
    inv_sq: Vec<f64>,
    s2: f64,
    noise: f64,
    kuu: DMatrix<f64>,
    l_uu: DMatrix<f64>,
    kuf: DMatrix<f64>,
    v: DMatrix<f64>,
    lambda: DVector<f64>,
    clamped: Vec<bool>,
    l_b: DMatrix<f64>,
    /// `L_B^-1 V Lambda^-1/2`
    e: DMatrix<f64>,
    /// `Lambda^-1/2 y`
    beta: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Snapshot {
    format_version: u32,
    kernel: KernelHyperparams,
    inducing_locations: Vec<Vec<f64>>,
    log_noise_variance: f64,
    jitter: f64,
}

const SNAPSHOT_VERSION: u32 = 1;

impl FitcModel {
    pub fn new(
        kernel: KernelHyperparams,
        inducing: DMatrix<f64>,
        noise_variance: f64,
        jitter: f64,
    ) -> Result<Self, GpError> {
        Self::from_log_parts(kernel, inducing, noise_variance.ln(), jitter)
    }

    fn from_log_parts(
        kernel: KernelHyperparams,
        inducing: DMatrix<f64>,
        log_noise_variance: f64,
        jitter: f64,
    ) -> Result<Self, GpError> {
        kernel.validate()?;
        if inducing.nrows() == 0 {
            return Err(GpError::InvalidParameter("at least one inducing location is required".into()));
        }
        if inducing.ncols() != kernel.dim() {
            return Err(GpError::DimensionMismatch { expected: kernel.dim(), found: inducing.ncols() });
        }
        if !inducing.iter().all(|v| v.is_finite()) {
            return Err(GpError::InvalidParameter("inducing locations must be finite".into()));
        }
        if !(jitter > 0.0 && jitter.is_finite()) {
            return Err(GpError::InvalidParameter(format!("jitter must be positive, got {jitter}")));
        }
        let noise = log_noise_variance.exp();
        if !(noise.is_finite() && noise > 0.0) {
            return Err(GpError::InvalidParameter("noise variance must be finite and positive".into()));
        }
        Ok(Self { kernel, inducing, log_noise_variance, jitter, state: None })
    }

    pub fn kernel(&self) -> &KernelHyperparams {
        &self.kernel
    }

    pub fn inducing_locations(&self) -> &DMatrix<f64> {
        &self.inducing
    }

    pub fn num_inducing(&self) -> usize {
        self.inducing.nrows()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise_variance.exp()
    }

    pub fn log_noise_variance(&self) -> f64 {
        self.log_noise_variance
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn is_conditioned(&self) -> bool {
        self.state.is_some()
    }

    pub fn training_data(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        self.state.as_ref().map(|s| (&s.x, &s.y))
    }

    /// Free parameters: log lengthscales, log signal variance, log noise
    /// variance, then inducing locations row by row.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.kernel.log_lengthscales.clone();
        p.push(self.kernel.log_signal_variance);
        p.push(self.log_noise_variance);
        for i in 0..self.inducing.nrows() {
            p.extend(self.inducing.row(i).iter());
        }
        p
    }

    /// A copy with parameters replaced; the factorization is dropped.
    pub fn with_params(&self, p: &[f64]) -> Result<Self, GpError> {
        let d = self.dim();
        let m = self.num_inducing();
        let expected = d + 2 + m * d;
        if p.len() != expected {
            return Err(GpError::LengthMismatch { what: "parameter vector", expected, found: p.len() });
        }
        let kernel = KernelHyperparams { log_lengthscales: p[..d].to_vec(), log_signal_variance: p[d] };
        let inducing = DMatrix::from_row_slice(m, d, &p[d + 2..]);
        Self::from_log_parts(kernel, inducing, p[d + 1], self.jitter)
    }

    pub fn with_jitter(&self, jitter: f64) -> Result<Self, GpError> {
        Self::from_log_parts(self.kernel.clone(), self.inducing.clone(), self.log_noise_variance, jitter)
    }

    fn check_data(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(), GpError> {
        if x.ncols() != self.dim() {
            return Err(GpError::DimensionMismatch { expected: self.dim(), found: x.ncols() });
        }
        if y.len() != x.nrows() {
            return Err(GpError::LengthMismatch { what: "targets", expected: x.nrows(), found: y.len() });
        }
        if x.nrows() == 0 {
            return Err(GpError::InvalidParameter("at least one observation is required".into()));
        }
        Ok(())
    }

    fn factorize(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Factors, GpError> {
        self.check_data(x, y)?;
        let inv_sq = self.kernel.inv_sq_lengthscales();
        let s2 = self.kernel.signal_variance();
        let noise = self.noise_variance();
        let m = self.num_inducing();
        let n = x.nrows();

        let kuu = cross_cov(&self.inducing, &self.inducing, &inv_sq, s2);
        let mut kuu_j = kuu.clone();
        for i in 0..m {
            kuu_j[(i, i)] += self.jitter;
        }
        let l_uu = Cholesky::new(kuu_j).ok_or(GpError::NotPositiveDefinite { matrix: "K_uu" })?.l();
        let kuf = cross_cov(&self.inducing, x, &inv_sq, s2);
        let v = l_uu.solve_lower_triangular(&kuf).ok_or(GpError::NotPositiveDefinite { matrix: "K_uu" })?;

        let mut lambda = DVector::zeros(n);
        let mut clamped = vec![false; n];
        for i in 0..n {
            let q = v.column(i).norm_squared();
            let gap = s2 - q;
            if gap < 0.0 {
                clamped[i] = true;
            }
            lambda[i] = gap.max(0.0) + noise;
        }
        let inv_sqrt: DVector<f64> = lambda.map(|l| 1.0 / l.sqrt());
        let mut v_scaled = v.clone();
        for i in 0..n {
            v_scaled.column_mut(i).scale_mut(inv_sqrt[i]);
        }
        let mut b = &v_scaled * v_scaled.transpose();
        for i in 0..m {
            b[(i, i)] += 1.0;
        }
        let l_b = Cholesky::new(b).ok_or(GpError::NotPositiveDefinite { matrix: "B = I + V Lambda^-1 V'" })?.l();
        let e = l_b
            .solve_lower_triangular(&v_scaled)
            .ok_or(GpError::NotPositiveDefinite { matrix: "B = I + V Lambda^-1 V'" })?;
        let beta = y.component_mul(&inv_sqrt);
        Ok(Factors { inv_sq, s2, noise, kuu, l_uu, kuf, v, lambda, clamped, l_b, e, beta })
    }

    /// FITC negative log marginal likelihood of `y` given inputs `x`.
    pub fn negative_log_marginal(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64, GpError> {
        let f = self.factorize(x, y)?;
        Ok(Self::nlml_from(&f))
    }

    fn nlml_from(f: &Factors) -> f64 {
        let n = f.beta.len() as f64;
        let eb = &f.e * &f.beta;
        let quad = f.beta.norm_squared() - eb.norm_squared();
        let logdet = 2.0 * f.l_b.diagonal().iter().map(|d| d.ln()).sum::<f64>()
            + f.lambda.iter().map(|l| l.ln()).sum::<f64>();
        0.5 * quad + 0.5 * logdet + 0.5 * n * (2.0 * PI).ln()
    }

    /// NLML and its gradient w.r.t. every free parameter.
    pub fn negative_log_marginal_with_gradient(
        &self,
        x: &DMatrix<f64>,
        y: &DVector<f64>,
    ) -> Result<(f64, FitcGradient), GpError> {
        let f = self.factorize(x, y)?;
        let value = Self::nlml_from(&f);
        let n = x.nrows();
        let m = self.num_inducing();
        let d = self.dim();

        // C^-1 = D (I - E'E) D with D = Lambda^-1/2.
        let inv_sqrt: Vec<f64> = f.lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
        let mut c_inv = -(f.e.transpose() * &f.e);
        for i in 0..n {
            c_inv[(i, i)] += 1.0;
        }
        for i in 0..n {
            for j in 0..n {
                c_inv[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        let alpha = &c_inv * y;
        // W = C^-1 - alpha alpha'; d NLML = 0.5 tr(W dC).
        let mut w = c_inv;
        w.ger(-1.0, &alpha, &alpha, 1.0);
        let trace_w = w.trace();
        let mut diag_term = 0.0;
        let mut w_off = w.clone();
        for i in 0..n {
            if !f.clamped[i] {
                diag_term += w[(i, i)];
                w_off[(i, i)] = 0.0;
            }
        }
        // K_uu^-1 K_uf = L^-T V
        let proj = f
            .l_uu
            .transpose()
            .solve_upper_triangular(&f.v)
            .ok_or(GpError::NotPositiveDefinite { matrix: "K_uu" })?;
        let g = &proj * &w_off; // M x n
        let h = &g * proj.transpose(); // M x M

        let gk = g.component_mul(&f.kuf);
        let hk = h.component_mul(&f.kuu);

        let log_signal_variance = gk.sum() - 0.5 * hk.sum() + 0.5 * f.s2 * diag_term;
        let log_noise_variance = 0.5 * f.noise * trace_w;

        let mut log_lengthscales = vec![0.0; d];
        let mut inducing = DMatrix::zeros(m, d);
        for j in 0..d {
            let w_j = f.inv_sq[j];
            let mut acc = 0.0;
            for mi in 0..m {
                let u = self.inducing[(mi, j)];
                let mut grad_u = 0.0;
                for i in 0..n {
                    let diff = x[(i, j)] - u;
                    acc += gk[(mi, i)] * diff * diff * w_j;
                    grad_u += gk[(mi, i)] * diff * w_j;
                }
                for mj in 0..m {
                    let diff = self.inducing[(mj, j)] - u;
                    acc -= 0.5 * hk[(mi, mj)] * diff * diff * w_j;
                    grad_u -= hk[(mi, mj)] * diff * w_j;
                }
                inducing[(mi, j)] = grad_u;
            }
            log_lengthscales[j] = acc;
        }
        Ok((value, FitcGradient { log_lengthscales, log_signal_variance, log_noise_variance, inducing }))
    }

    /// Caches the posterior for data `(x, y)` so that predictions can be served.
    pub fn condition(&mut self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(), GpError> {
        let f = self.factorize(x, y)?;
        let m = self.num_inducing();
        let not_pd = GpError::NotPositiveDefinite { matrix: "K_uu" };
        let eb = &f.e * &f.beta;
        let t = f.l_b.transpose().solve_upper_triangular(&eb).ok_or(not_pd.clone())?;
        let weights = f.l_uu.transpose().solve_upper_triangular(&t).ok_or(not_pd.clone())?;
        let l_inv = f.l_uu.solve_lower_triangular(&DMatrix::identity(m, m)).ok_or(not_pd.clone())?;
        let lb_l_inv = f.l_b.solve_lower_triangular(&l_inv).ok_or(not_pd)?;
        let var_reduction = l_inv.transpose() * &l_inv - lb_l_inv.transpose() * &lb_l_inv;
        self.state = Some(Posterior { x: x.clone(), y: y.clone(), weights, var_reduction });
        Ok(())
    }

    pub fn conditioned(mut self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self, GpError> {
        self.condition(x, y)?;
        Ok(self)
    }

    /// A copy conditioned on the current data plus one extra observation.
    pub fn with_extra_observation(&self, z: &[f64], y: f64) -> Result<Self, GpError> {
        let state = self.state.as_ref().ok_or(GpError::StaleState)?;
        if z.len() != self.dim() {
            return Err(GpError::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        let n = state.x.nrows();
        let x = state.x.clone().insert_row(n, 0.0);
        let mut x = x;
        x.row_mut(n).copy_from_slice(z);
        let yv = state.y.clone().push(y);
        let mut out = self.clone();
        out.state = None;
        out.condition(&x, &yv)?;
        Ok(out)
    }

    /// A copy with `z` appended to the inducing locations, conditioned on the
    /// same data plus the observation `y` at `z`. Used for believed
    /// observations: with `z` inducing, the observation shrinks the latent
    /// variance at `z` to the noise level even far from the original set.
    pub fn with_extra_inducing_observation(&self, z: &[f64], y: f64) -> Result<Self, GpError> {
        if z.len() != self.dim() {
            return Err(GpError::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        let state = self.state.as_ref().ok_or(GpError::StaleState)?;
        let m = self.inducing.nrows();
        let mut inducing = self.inducing.clone().insert_row(m, 0.0);
        inducing.row_mut(m).copy_from_slice(z);
        let n = state.x.nrows();
        let mut x = state.x.clone().insert_row(n, 0.0);
        x.row_mut(n).copy_from_slice(z);
        let yv = state.y.clone().push(y);
        Self::from_log_parts(self.kernel.clone(), inducing, self.log_noise_variance, self.jitter)?.conditioned(&x, &yv)
    }

    pub fn predict(&self, zq: &DMatrix<f64>) -> Result<GpPrediction, GpError> {
        let state = self.state.as_ref().ok_or(GpError::StaleState)?;
        if zq.ncols() != self.dim() {
            return Err(GpError::DimensionMismatch { expected: self.dim(), found: zq.ncols() });
        }
        let inv_sq = self.kernel.inv_sq_lengthscales();
        let s2 = self.kernel.signal_variance();
        let ksu = cross_cov(zq, &self.inducing, &inv_sq, s2);
        let mean = (&ksu * &state.weights).iter().copied().collect();
        let pk = &ksu * &state.var_reduction;
        let latent_variance = (0..zq.nrows())
            .map(|i| (s2 - ksu.row(i).dot(&pk.row(i))).max(0.0))
            .collect();
        Ok(GpPrediction { mean, latent_variance, noise_variance: self.noise_variance() })
    }

    /// Mean and latent variance at `z` with their gradients w.r.t. `z`.
    pub fn predict_point(&self, z: &[f64]) -> Result<PointPrediction, GpError> {
        let state = self.state.as_ref().ok_or(GpError::StaleState)?;
        let d = self.dim();
        if z.len() != d {
            return Err(GpError::DimensionMismatch { expected: d, found: z.len() });
        }
        let inv_sq = self.kernel.inv_sq_lengthscales();
        let s2 = self.kernel.signal_variance();
        let k = DVector::from_vec(point_cov(z, &self.inducing, &inv_sq, s2));
        let pk = &state.var_reduction * &k;
        let mean = k.dot(&state.weights);
        let raw_var = s2 - k.dot(&pk);
        let mut d_mean = vec![0.0; d];
        let mut d_variance = vec![0.0; d];
        for mi in 0..self.num_inducing() {
            let wm = state.weights[mi];
            let pm = pk[mi];
            for j in 0..d {
                // d k(z, u_m) / d z_j
                let dk = -k[mi] * (z[j] - self.inducing[(mi, j)]) * inv_sq[j];
                d_mean[j] += wm * dk;
                d_variance[j] -= 2.0 * pm * dk;
            }
        }
        if raw_var <= 0.0 {
            d_variance.iter_mut().for_each(|g| *g = 0.0);
        }
        Ok(PointPrediction { mean, latent_variance: raw_var.max(0.0), d_mean, d_variance })
    }

    /// JSON snapshot of the parameters (not the cached factorization).
    pub fn to_json(&self) -> String {
        let snap = Snapshot {
            format_version: SNAPSHOT_VERSION,
            kernel: self.kernel.clone(),
            inducing_locations: (0..self.num_inducing())
                .map(|i| self.inducing.row(i).iter().copied().collect())
                .collect(),
            log_noise_variance: self.log_noise_variance,
            jitter: self.jitter,
        };
        serde_json::to_string_pretty(&snap).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GpError> {
        let snap: Snapshot =
            serde_json::from_str(s).map_err(|e| GpError::InvalidParameter(format!("snapshot: {e}")))?;
        if snap.format_version != SNAPSHOT_VERSION {
            return Err(GpError::InvalidParameter(format!("unsupported snapshot version {}", snap.format_version)));
        }
        let d = snap.kernel.dim();
        let m = snap.inducing_locations.len();
        if snap.inducing_locations.iter().any(|r| r.len() != d) {
            return Err(GpError::InvalidParameter("inducing rows must match the kernel dimension".into()));
        }
        let flat: Vec<f64> = snap.inducing_locations.concat();
        Self::from_log_parts(snap.kernel, DMatrix::from_row_slice(m, d, &flat), snap.log_noise_variance, snap.jitter)
    }
}
