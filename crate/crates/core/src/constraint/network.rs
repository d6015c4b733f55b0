use serde::{Deserialize, Serialize};

use super::ConstraintError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `exp(-x^2)`
    GaussianRbf,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::GaussianRbf => (-x * x).exp(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative given the pre-activation `x` and the activation value `a`.
    fn derivative(self, x: f64, a: f64) -> f64 {
        match self {
            Activation::GaussianRbf => -2.0 * x * a,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected network `d -> hidden... -> 1` with a logistic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnnArchitecture {
    pub layer_widths: Vec<usize>,
    pub hidden_activation: Activation,
}

impl BnnArchitecture {
    pub fn new(layer_widths: Vec<usize>, hidden_activation: Activation) -> Result<Self, ConstraintError> {
        let arch = Self { layer_widths, hidden_activation };
        arch.validate()?;
        Ok(arch)
    }

    /// One hidden layer of 50 Gaussian units.
    pub fn single_hidden_rbf(input_dim: usize) -> Self {
        Self { layer_widths: vec![input_dim, 50, 1], hidden_activation: Activation::GaussianRbf }
    }

    /// Two hidden ReLU layers of 100 units.
    pub fn two_hidden_relu(input_dim: usize) -> Self {
        Self { layer_widths: vec![input_dim, 100, 100, 1], hidden_activation: Activation::Relu }
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        if self.layer_widths.len() < 3 {
            return Err(ConstraintError::InvalidArchitecture("at least one hidden layer is required".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(ConstraintError::InvalidArchitecture("layer widths must be positive".into()));
        }
        if *self.layer_widths.last().unwrap() != 1 {
            return Err(ConstraintError::InvalidArchitecture("the output layer must have width 1".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    /// `(d_in, d_out)` per layer.
    pub fn layers(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.layer_widths.windows(2).map(|w| (w[0], w[1]))
    }

    /// Weights followed by biases, layer after layer.
    pub fn num_params(&self) -> usize {
        self.layers().map(|(i, o)| i * o + o).sum()
    }

    fn max_width(&self) -> usize {
        *self.layer_widths.iter().max().unwrap()
    }
}

/// Scratch space for one forward/backward pass.
pub(crate) struct Workspace {
    /// Pre-activations per layer (output layer included).
    pre: Vec<Vec<f64>>,
    /// Activations per layer, the input first.
    act: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(arch: &BnnArchitecture) -> Self {
        Self {
            pre: arch.layer_widths[1..].iter().map(|&w| vec![0.0; w]).collect(),
            act: arch.layer_widths.iter().map(|&w| vec![0.0; w]).collect(),
            delta: vec![0.0; arch.max_width()],
            next_delta: vec![0.0; arch.max_width()],
        }
    }
}

/// Output logit of the network with flat weights `w` at input `x`.
pub(crate) fn forward(arch: &BnnArchitecture, w: &[f64], x: &[f64], ws: &mut Workspace) -> f64 {
    ws.act[0].copy_from_slice(x);
    let n_layers = arch.layer_widths.len() - 1;
    let mut offset = 0;
    for (l, (din, dout)) in arch.layers().enumerate() {
        let weights = &w[offset..offset + din * dout];
        let bias = &w[offset + din * dout..offset + din * dout + dout];
        offset += din * dout + dout;
        let (inputs, rest) = ws.act.split_at_mut(l + 1);
        let input = &inputs[l];
        for o in 0..dout {
            let row = &weights[o * din..(o + 1) * din];
            let s: f64 = row.iter().zip(input.iter()).map(|(a, b)| a * b).sum::<f64>() + bias[o];
            ws.pre[l][o] = s;
            rest[0][o] = if l + 1 < n_layers { arch.hidden_activation.apply(s) } else { s };
        }
    }
    ws.pre[n_layers - 1][0]
}

/// Back-propagates `d_logit` (derivative of some scalar w.r.t. the output
/// logit) after a [`forward`] call, accumulating into `grad_w` and, when
/// given, into `grad_x`.
pub(crate) fn backward(
    arch: &BnnArchitecture,
    w: &[f64],
    d_logit: f64,
    ws: &mut Workspace,
    grad_w: Option<&mut [f64]>,
    grad_x: Option<&mut [f64]>,
) {
    let layers: Vec<(usize, usize)> = arch.layers().collect();
    let n_layers = layers.len();
    let mut offsets = Vec::with_capacity(n_layers);
    let mut off = 0;
    for &(din, dout) in &layers {
        offsets.push(off);
        off += din * dout + dout;
    }
    let mut grad_w = grad_w;
    ws.delta[0] = d_logit;
    for l in (0..n_layers).rev() {
        let (din, dout) = layers[l];
        let base = offsets[l];
        if let Some(g) = grad_w.as_deref_mut() {
            let input = &ws.act[l];
            for o in 0..dout {
                let dl = ws.delta[o];
                if dl == 0.0 {
                    continue;
                }
                let row = &mut g[base + o * din..base + (o + 1) * din];
                for (gi, xi) in row.iter_mut().zip(input.iter()) {
                    *gi += dl * xi;
                }
                g[base + din * dout + o] += dl;
            }
        }
        if l == 0 && grad_x.is_none() {
            break;
        }
        // delta w.r.t. this layer's input activations
        let weights = &w[base..base + din * dout];
        for i in 0..din {
            let mut s = 0.0;
            for o in 0..dout {
                s += weights[o * din + i] * ws.delta[o];
            }
            ws.next_delta[i] = s;
        }
        if l > 0 {
            for i in 0..din {
                let x = ws.pre[l - 1][i];
                let a = ws.act[l][i];
                ws.next_delta[i] *= arch.hidden_activation.derivative(x, a);
            }
        }
        std::mem::swap(&mut ws.delta, &mut ws.next_delta);
    }
    if let Some(gx) = grad_x {
        for (g, d) in gx.iter_mut().zip(ws.delta.iter()) {
            *g += d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_invariants() {
        assert!(BnnArchitecture::new(vec![2, 1], Activation::Relu).is_err());
        assert!(BnnArchitecture::new(vec![2, 5, 2], Activation::Relu).is_err());
        assert!(BnnArchitecture::new(vec![2, 0, 1], Activation::Relu).is_err());
        let a = BnnArchitecture::new(vec![2, 50, 1], Activation::GaussianRbf).unwrap();
        assert_eq!(a.num_params(), 2 * 50 + 50 + 50 + 1);
    }

    fn check_backprop(arch: &BnnArchitecture) {
        let n = arch.num_params();
        let w: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) as f64 * 0.37).sin() * 0.8).collect();
        let x: Vec<f64> = (0..arch.input_dim()).map(|i| (i as f64 * 1.3 + 0.2).cos()).collect();
        let mut ws = Workspace::new(arch);
        forward(arch, &w, &x, &mut ws);
        let mut gw = vec![0.0; n];
        let mut gx = vec![0.0; x.len()];
        backward(arch, &w, 1.0, &mut ws, Some(&mut gw), Some(&mut gx));
        let h = 1e-6;
        for i in (0..n).step_by(3) {
            let mut wp = w.clone();
            wp[i] += h;
            let mut wm = w.clone();
            wm[i] -= h;
            let fd = (forward(arch, &wp, &x, &mut ws) - forward(arch, &wm, &x, &mut ws)) / (2.0 * h);
            assert!((fd - gw[i]).abs() < 1e-6 * fd.abs().max(1.0), "w[{i}]: {fd} vs {}", gw[i]);
        }
        for j in 0..x.len() {
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let fd = (forward(arch, &w, &xp, &mut ws) - forward(arch, &w, &xm, &mut ws)) / (2.0 * h);
            assert!((fd - gx[j]).abs() < 1e-6 * fd.abs().max(1.0), "x[{j}]: {fd} vs {}", gx[j]);
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        check_backprop(&BnnArchitecture::new(vec![3, 7, 1], Activation::GaussianRbf).unwrap());
        check_backprop(&BnnArchitecture::new(vec![2, 6, 5, 1], Activation::Relu).unwrap());
        check_backprop(&BnnArchitecture::new(vec![2, 4, 4, 1], Activation::GaussianRbf).unwrap());
    }
}
