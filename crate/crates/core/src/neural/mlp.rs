use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;

use super::{Activation, Hyperparams};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Step for the central finite differences in [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

/// Fully connected layer; `weights` is `inputs × outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }
}

/// Sequential network. `keep_probs[i]` is the dropout keep probability
/// applied after layer `i`; the output layer has none.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub keep_probs: Vec<f64>,
    pub init_seed: u64,
}

/// Loss gradients, shaped like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    /// Weights then bias of each layer, in layer order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }
}

pub(crate) struct Cache {
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl Cache {
    pub(crate) fn output(&self) -> ArrayView1<'_, f64> {
        self.post.last().expect("nonempty").column(0)
    }
}

fn init_layer(rng: &mut impl Rng, fan_in: usize, fan_out: usize, activation: Activation) -> Dense {
    // Glorot-uniform for linear layers, He-uniform for relu layers.
    let limit = match activation {
        Activation::Linear => (6.0 / (fan_in + fan_out) as f64).sqrt(),
        Activation::Relu => (6.0 / fan_in as f64).sqrt(),
    };
    Dense {
        weights: Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..limit)),
        bias: Array1::zeros(fan_out),
        activation,
    }
}

pub fn build_mlp(d: usize, hp: &Hyperparams, seed: u64) -> Result<Mlp> {
    build_mlp_with(d, hp, seed, Activation::Linear)
}

/// As [`build_mlp`] with an explicit activation for the first dense layer.
pub fn build_mlp_with(d: usize, hp: &Hyperparams, seed: u64, input_activation: Activation) -> Result<Mlp> {
    if d == 0 {
        return Err(Error::InvalidArgument("network input width must be positive".into()));
    }
    hp.validate()?;
    let mut rng = seeded(seed);
    let mut layers = vec![init_layer(&mut rng, d, hp.input_units, input_activation)];
    let mut keep_probs = vec![1.0 - hp.dropout_rate];
    let mut width = hp.input_units;
    for (&units, &rate) in hp.units.iter().zip(&hp.dropout_rates) {
        layers.push(init_layer(&mut rng, width, units, Activation::Relu));
        keep_probs.push(1.0 - rate);
        width = units;
    }
    layers.push(init_layer(&mut rng, width, 1, Activation::Linear));
    Ok(Mlp {
        layers,
        keep_probs,
        init_seed: seed,
    })
}

fn apply_activation(a: &mut Array2<f64>, activation: Activation) {
    if activation == Activation::Relu {
        a.mapv_inplace(|v| v.max(0.0));
    }
}

impl Mlp {
    /// Builds a network from explicit layers, checking that widths chain
    /// and that the output is a single linear unit.
    pub fn from_layers(layers: Vec<Dense>, keep_probs: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("network: {m}")));
        if layers.is_empty() {
            return bad("needs at least one layer");
        }
        if keep_probs.len() != layers.len() - 1 {
            return bad("one keep probability per non-output layer");
        }
        if keep_probs.iter().any(|&k| !(k > 0.0 && k <= 1.0)) {
            return bad("keep probabilities must lie in (0, 1]");
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return bad("adjacent layer widths do not chain");
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return bad("bias length differs from layer width");
            }
        }
        let last = layers.last().expect("nonempty");
        if last.outputs() != 1 || last.activation != Activation::Linear {
            return bad("output must be one linear unit");
        }
        Ok(Self {
            layers,
            keep_probs,
            init_seed: 0,
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    /// `[d, width₁, …, 1]`.
    pub fn layer_widths(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(Dense::outputs))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_width(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub(crate) fn param_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect()
    }

    /// Inverted-dropout masks for a batch: kept units carry `1/keep`.
    /// Each unit is kept iff a uniform 16-bit draw is below `keep·2¹⁶`.
    pub(crate) fn draw_masks(&self, rows: usize, rng: &mut impl Rng) -> Vec<Option<Array2<f64>>> {
        let mut bytes = Vec::new();
        self.keep_probs
            .iter()
            .zip(&self.layers)
            .map(|(&keep, layer)| {
                (keep < 1.0).then(|| {
                    let scale = 1.0 / keep;
                    let threshold = (keep * 65_536.0).round() as u32;
                    bytes.resize(2 * rows * layer.outputs(), 0);
                    rng.fill_bytes(&mut bytes);
                    let values = bytes
                        .chunks_exact(2)
                        .map(|b| {
                            if (u16::from_le_bytes([b[0], b[1]]) as u32) < threshold {
                                scale
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    Array2::from_shape_vec((rows, layer.outputs()), values).expect("mask shape")
                })
            })
            .collect()
    }

    pub(crate) fn forward_cached(&self, x: ArrayView2<f64>, masks: &[Option<Array2<f64>>]) -> Cache {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let input = if l == 0 { x } else { post[l - 1].view() };
            let mut z = input.dot(&layer.weights);
            z += &layer.bias;
            let mut a = z.clone();
            apply_activation(&mut a, layer.activation);
            if let Some(Some(mask)) = masks.get(l) {
                a *= mask;
            }
            pre.push(z);
            post.push(a);
        }
        Cache { pre, post }
    }

    /// Backpropagates `d_out = ∂L/∂ŷ` through a cached forward pass.
    pub(crate) fn backward(
        &self,
        x: ArrayView2<f64>,
        cache: &Cache,
        masks: &[Option<Array2<f64>>],
        d_out: ArrayView1<f64>,
    ) -> Gradients {
        let n_layers = self.layers.len();
        let mut gw = Vec::with_capacity(n_layers);
        let mut gb = Vec::with_capacity(n_layers);
        let mut delta = d_out.to_owned().insert_axis(Axis(1));
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            if let Some(Some(mask)) = masks.get(l) {
                delta *= mask;
            }
            if layer.activation == Activation::Relu {
                Zip::from(&mut delta)
                    .and(&cache.pre[l])
                    .for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0
                        }
                    });
            }
            let input = if l == 0 { x } else { cache.post[l - 1].view() };
            let mut g = Array2::zeros(layer.weights.raw_dim());
            general_mat_mul(1.0, &input.t(), &delta, 0.0, &mut g);
            gw.push(g);
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                delta = delta.dot(&layer.weights.t());
            }
        }
        gw.reverse();
        gb.reverse();
        Gradients {
            weights: gw,
            biases: gb,
        }
    }

    /// Inference-mode output (dropout disabled).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_width(&x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let mut a = x.to_owned();
        for layer in &self.layers {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            apply_activation(&mut z, layer.activation);
            a = z;
        }
        a.column(0).to_owned()
    }

    /// Weighted mean squared error `Σ wᵢ(yᵢ − ŷᵢ)² / Σ wᵢ`, inference mode.
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView1<f64>, w: &[f64]) -> Result<f64> {
        self.check_width(&x)?;
        Ok(weighted_mse(self.predict_unchecked(x).view(), y, w))
    }

    /// Loss and its exact gradient with dropout disabled.
    pub fn loss_gradient(&self, x: ArrayView2<f64>, y: ArrayView1<f64>, w: &[f64]) -> Result<(f64, Gradients)> {
        self.check_width(&x)?;
        let cache = self.forward_cached(x, &[]);
        let out = cache.post.last().expect("nonempty").column(0).to_owned();
        let d_out = mse_gradient(out.view(), y, w);
        Ok((weighted_mse(out.view(), y, w), self.backward(x, &cache, &[], d_out.view())))
    }

    /// Smallest |pre-activation| over all relu units and rows.
    pub fn min_relu_margin(&self, x: ArrayView2<f64>) -> f64 {
        let cache = self.forward_cached(x, &[]);
        self.layers
            .iter()
            .zip(&cache.pre)
            .filter(|(l, _)| l.activation == Activation::Relu)
            .flat_map(|(_, z)| z.iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Jitters rows whose relu pre-activations sit within `margin` of the
    /// kink until none do. Gives up after a bounded number of attempts.
    pub fn nudge_off_kinks(&self, x: ArrayView2<f64>, margin: f64, seed: u64) -> Option<Array2<f64>> {
        let mut rng = seeded(seed);
        let mut out = x.to_owned();
        for i in 0..out.nrows() {
            let mut ok = false;
            for _ in 0..10_000 {
                let row = out.slice(ndarray::s![i..i + 1, ..]);
                if self.min_relu_margin(row) >= margin {
                    ok = true;
                    break;
                }
                for v in out.row_mut(i) {
                    *v += rng.random_range(-0.05..0.05);
                }
            }
            if !ok {
                return None;
            }
        }
        Some(out)
    }
}

pub(crate) fn weighted_mse(pred: ArrayView1<f64>, y: ArrayView1<f64>, w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..pred.len() {
        let r = pred[i] - y[i];
        num += w[i] * r * r;
        den += w[i];
    }
    num / den
}

pub(crate) fn mse_gradient(pred: ArrayView1<f64>, y: ArrayView1<f64>, w: &[f64]) -> Array1<f64> {
    let wsum: f64 = w.iter().sum();
    Array1::from_shape_fn(pred.len(), |i| 2.0 * w[i] * (pred[i] - y[i]) / wsum)
}

/// Network output. With `training = true`, inverted dropout masks are drawn
/// from `seed`; otherwise dropout is the identity.
pub fn forward(mlp: &Mlp, features: ArrayView2<f64>, training: bool, seed: u64) -> Result<Array1<f64>> {
    mlp.check_width(&features)?;
    if !training {
        return Ok(mlp.predict_unchecked(features));
    }
    let masks = mlp.draw_masks(features.nrows(), &mut seeded(seed));
    let cache = mlp.forward_cached(features, &masks);
    Ok(cache.post.last().expect("nonempty").column(0).to_owned())
}

/// Largest relative discrepancy between the analytic gradient and a central
/// finite difference, over all parameters. Dropout is ignored.
///
/// Relative error is `|a − f| / max(|a|, |f|, 1e-6)`; the floor keeps
/// parameters with vanishing gradients from amplifying rounding noise.
pub fn gradient_check(mlp: &Mlp, features: ArrayView2<f64>, target: ArrayView1<f64>, weights: &[f64]) -> Result<f64> {
    let (_, grads) = mlp.loss_gradient(features, target, weights)?;
    let analytic = grads.flatten();
    let mut probe = mlp.clone();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    let n_tensors = probe.param_sizes().len();
    for t in 0..n_tensors {
        let len = probe.param_sizes()[t];
        for i in 0..len {
            let orig = probe.param_slices_mut()[t][i];
            probe.param_slices_mut()[t][i] = orig + FD_STEP;
            let up = probe.loss(features, target, weights)?;
            probe.param_slices_mut()[t][i] = orig - FD_STEP;
            let down = probe.loss(features, target, weights)?;
            probe.param_slices_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            k += 1;
        }
    }
    Ok(worst)
}
