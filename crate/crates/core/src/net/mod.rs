//! Scalar-input MLPs with tanh or sigmoid hidden layers and a linear readout,
//! plus the varied-depth combination of such networks.
//!
//! Layer weights are row-major `rows × cols` where `cols` is the width of the
//! previous layer (1 for the first layer, since the input is a scalar).

mod checkpoint;
mod train;
mod varied;

pub use checkpoint::{Checkpoint, InputMap, ModelParams, CHECKPOINT_FORMAT};
pub use train::{train, BatchPolicy, EpochLoss, Model, TrainConfig, TrainOutcome};
pub use varied::{build_varied_depth, VariedDepthNet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset too small: {0}")]
    Dataset(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// φ′ expressed through y = φ(z): `1 − y²` or `y(1 − y)`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    /// Values of φ at −∞ and +∞, i.e. the zeros of the derivative polynomial.
    pub fn saturation_values(self) -> [f64; 2] {
        match self {
            Activation::Tanh => [-1.0, 1.0],
            Activation::Sigmoid => [0.0, 1.0],
        }
    }

    /// Open range of the activation.
    pub fn range(self) -> (f64, f64) {
        let [lo, hi] = self.saturation_values();
        (lo, hi)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(NetError::Config(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols` entries.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self, NetError> {
        let layer = Layer {
            rows,
            cols,
            weights,
            biases,
        };
        layer.check_shape()?;
        Ok(layer)
    }

    fn check_shape(&self) -> Result<(), NetError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(NetError::Shape("layer dimensions must be positive".into()));
        }
        if self.weights.len() != self.rows * self.cols {
            return Err(NetError::Shape(format!(
                "weights have {} entries, expected {}x{}",
                self.weights.len(),
                self.rows,
                self.cols
            )));
        }
        if self.biases.len() != self.rows {
            return Err(NetError::Shape(format!(
                "biases have {} entries, expected {}",
                self.biases.len(),
                self.rows
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }
}

/// Parameters θ of a scalar-input, scalar-output MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub activation: Activation,
    pub layers: Vec<Layer>,
    pub alpha: Vec<f64>,
    pub beta: f64,
}

/// Hidden state of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub preacts: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
    pub output: f64,
}

impl ForwardTrace {
    /// Hidden activations stacked layer by layer, `(h¹, …, hᴸ)`.
    pub fn stacked_hidden(&self) -> Vec<f64> {
        self.hidden.iter().flatten().copied().collect()
    }
}

/// Gradient with the same shape as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl Gradient {
    pub(crate) fn zeros_like(net: &NetworkParams) -> Self {
        Gradient {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
            alpha: vec![0.0; net.alpha.len()],
            beta: 0.0,
        }
    }

    /// Same layout as [`NetworkParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out.extend_from_slice(&self.alpha);
        out.push(self.beta);
        out
    }
}

impl NetworkParams {
    /// Checks shapes, the layer chain, scalar input and finiteness.
    pub fn validate(&self) -> Result<(), NetError> {
        if self.layers.is_empty() {
            return Err(NetError::Shape("network needs at least one hidden layer".into()));
        }
        let mut prev = 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.check_shape()?;
            if layer.cols != prev {
                return Err(NetError::Shape(format!(
                    "layer {} expects {} inputs but previous width is {}",
                    i + 1,
                    layer.cols,
                    prev
                )));
            }
            prev = layer.rows;
        }
        if self.alpha.len() != prev {
            return Err(NetError::Shape(format!(
                "readout has {} weights, last hidden width is {}",
                self.alpha.len(),
                prev
            )));
        }
        if !self.flatten().iter().all(|v| v.is_finite()) {
            return Err(NetError::NonFinite("network parameter".into()));
        }
        Ok(())
    }

    /// Glorot-uniform weights and zero biases. The readout is initialized the
    /// same way with fan-out 1.
    pub fn init(widths: &[usize], activation: Activation, seed: u64) -> Result<Self, NetError> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(NetError::Shape(format!("invalid widths {widths:?}")));
        }
        let mut rng = seed::rng_for(seed, &[seed::tag("init")]);
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = 1;
        for &w in widths {
            let limit = (6.0 / (prev + w) as f64).sqrt();
            let weights = (0..w * prev).map(|_| rng.random_range(-limit..limit)).collect();
            layers.push(Layer {
                rows: w,
                cols: prev,
                weights,
                biases: vec![0.0; w],
            });
            prev = w;
        }
        let limit = (6.0 / (prev + 1) as f64).sqrt();
        let alpha = (0..prev).map(|_| rng.random_range(-limit..limit)).collect();
        Ok(NetworkParams {
            activation,
            layers,
            alpha,
            beta: 0.0,
        })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.rows).collect()
    }

    /// M = Σ m_ℓ.
    pub fn total_hidden_width(&self) -> usize {
        self.layers.iter().map(|l| l.rows).sum()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum::<usize>()
            + self.alpha.len()
            + 1
    }

    /// Layer weights (row-major) and biases layer by layer, then α, then β.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out.extend_from_slice(&self.alpha);
        out.push(self.beta);
        out
    }

    /// Inverse of [`flatten`](Self::flatten); `flat.len()` must equal `n_params()`.
    pub fn assign(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length");
        let mut pos = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[pos..pos + nw]);
            pos += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
        let na = self.alpha.len();
        self.alpha.copy_from_slice(&flat[pos..pos + na]);
        self.beta = flat[pos + na];
    }

    pub fn forward(&self, x: f64) -> Result<ForwardTrace, NetError> {
        if !x.is_finite() {
            return Err(NetError::NonFinite(format!("input {x}")));
        }
        self.validate()?;
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z: Vec<f64> = (0..layer.rows)
                .map(|r| {
                    let dot = if i == 0 {
                        layer.weights[r] * x
                    } else {
                        let prev = &hidden[i - 1];
                        (0..layer.cols).map(|c| layer.weight(r, c) * prev[c]).sum()
                    };
                    dot + layer.biases[r]
                })
                .collect();
            hidden.push(z.iter().map(|&v| self.activation.apply(v)).collect());
            preacts.push(z);
        }
        let last = hidden.last().expect("validated: at least one layer");
        let output = self.alpha.iter().zip(last).map(|(a, h)| a * h).sum::<f64>() + self.beta;
        Ok(ForwardTrace {
            preacts,
            hidden,
            output,
        })
    }

    /// Network output without validation; callers must have validated `self`.
    pub fn output(&self, x: f64) -> f64 {
        let mut buf = Buffers::new(self);
        self.output_with(x, &mut buf)
    }

    pub(crate) fn output_with(&self, x: f64, buf: &mut Buffers) -> f64 {
        self.fill_hidden(x, buf);
        let last = buf.hidden.last().expect("at least one layer");
        self.alpha.iter().zip(last).map(|(a, h)| a * h).sum::<f64>() + self.beta
    }

    #[inline]
    fn fill_hidden(&self, x: f64, buf: &mut Buffers) {
        let act = self.activation;
        for (i, layer) in self.layers.iter().enumerate() {
            let (before, rest) = buf.hidden.split_at_mut(i);
            let out = &mut rest[0];
            if i == 0 {
                for r in 0..layer.rows {
                    out[r] = act.apply(layer.weights[r] * x + layer.biases[r]);
                }
            } else {
                let prev = &before[i - 1];
                for r in 0..layer.rows {
                    let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                    let dot: f64 = row.iter().zip(prev.iter()).map(|(w, h)| w * h).sum();
                    out[r] = act.apply(dot + layer.biases[r]);
                }
            }
        }
    }

    /// Mean squared error over `batch` and its exact reverse-mode gradient.
    pub fn gradient(&self, batch: &[(f64, f64)]) -> Result<(f64, Gradient), NetError> {
        if batch.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        self.validate()?;
        let mut grad = Gradient::zeros_like(self);
        let mut buf = Buffers::new(self);
        let loss = self.accumulate_gradient(batch, 1.0, &mut grad, &mut buf);
        Ok((loss, grad))
    }

    /// Adds `scale · ∂MSE/∂θ` into `grad` and returns the MSE.
    pub(crate) fn accumulate_gradient(
        &self,
        batch: &[(f64, f64)],
        scale: f64,
        grad: &mut Gradient,
        buf: &mut Buffers,
    ) -> f64 {
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for &(x, y) in batch {
            let f = self.output_with(x, buf);
            let r = f - y;
            loss += r * r;
            self.backward_sample(x, scale * 2.0 * r / n, grad, buf);
        }
        loss / n
    }

    /// Backpropagates `dl_df` (derivative of the loss with respect to this
    /// network's output) for input `x`, using hidden states already in `buf`.
    pub(crate) fn backward_sample(&self, x: f64, dl_df: f64, grad: &mut Gradient, buf: &mut Buffers) {
        let act = self.activation;
        let depth = self.layers.len();
        let last = &buf.hidden[depth - 1];
        grad.beta += dl_df;
        for (g, h) in grad.alpha.iter_mut().zip(last) {
            *g += dl_df * h;
        }
        {
            let delta = &mut buf.delta[depth - 1];
            for j in 0..delta.len() {
                delta[j] = dl_df * self.alpha[j] * act.derivative_from_output(last[j]);
            }
        }
        for i in (0..depth).rev() {
            let layer = &self.layers[i];
            let (gw, gb) = &mut grad.layers[i];
            let (lower, upper) = buf.delta.split_at_mut(i);
            let delta = &upper[0];
            for r in 0..layer.rows {
                let d = delta[r];
                gb[r] += d;
                if i == 0 {
                    gw[r] += d * x;
                } else {
                    let prev = &buf.hidden[i - 1];
                    let row = &mut gw[r * layer.cols..(r + 1) * layer.cols];
                    for (g, h) in row.iter_mut().zip(prev.iter()) {
                        *g += d * h;
                    }
                }
            }
            if i > 0 {
                let prev = &buf.hidden[i - 1];
                let below = &mut lower[i - 1];
                for c in 0..layer.cols {
                    let mut s = 0.0;
                    for r in 0..layer.rows {
                        s += layer.weights[r * layer.cols + c] * delta[r];
                    }
                    below[c] = s * act.derivative_from_output(prev[c]);
                }
            }
        }
    }

    /// Limit of the output as x → +∞ (`direction > 0`) or −∞, obtained by
    /// saturating every first-layer neuron and propagating the saturation
    /// vector through the remaining layers.
    pub fn limit_at_infinity(&self, direction: f64) -> f64 {
        let act = self.activation;
        let [low, high] = act.saturation_values();
        let mut s: Vec<f64> = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            s = if i == 0 {
                (0..layer.rows)
                    .map(|r| {
                        let slope = layer.weights[r] * direction;
                        if slope > 0.0 {
                            high
                        } else if slope < 0.0 {
                            low
                        } else {
                            act.apply(layer.biases[r])
                        }
                    })
                    .collect()
            } else {
                propagate_layer(layer, act, &s)
            };
        }
        self.alpha.iter().zip(&s).map(|(a, h)| a * h).sum::<f64>() + self.beta
    }
}

/// `φ(W s + b)` for one layer.
pub(crate) fn propagate_layer(layer: &Layer, act: Activation, s: &[f64]) -> Vec<f64> {
    (0..layer.rows)
        .map(|r| {
            let dot: f64 = (0..layer.cols).map(|c| layer.weight(r, c) * s[c]).sum();
            act.apply(dot + layer.biases[r])
        })
        .collect()
}

/// Scratch space for forward/backward passes.
pub(crate) struct Buffers {
    hidden: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Buffers {
    pub(crate) fn new(net: &NetworkParams) -> Self {
        Buffers {
            hidden: net.layers.iter().map(|l| vec![0.0; l.rows]).collect(),
            delta: net.layers.iter().map(|l| vec![0.0; l.rows]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn single_neuron(act: Activation, w: f64, b: f64, alpha: f64, beta: f64) -> NetworkParams {
        NetworkParams {
            activation: act,
            layers: vec![Layer::new(1, 1, vec![w], vec![b]).unwrap()],
            alpha: vec![alpha],
            beta,
        }
    }

    #[test]
    fn single_tanh_neuron_values() {
        let net = single_neuron(Activation::Tanh, 1.0, 0.0, 1.0, 0.0);
        assert_eq!(net.forward(0.0).unwrap().output, 0.0);
        assert!((net.forward(40.0).unwrap().output - 1.0).abs() < 1e-15);
        assert_eq!(net.limit_at_infinity(1.0), 1.0);
        assert_eq!(net.limit_at_infinity(-1.0), -1.0);
    }

    #[test]
    fn trace_follows_recursion() {
        let net = NetworkParams::init(&[3, 2], Activation::Sigmoid, 11).unwrap();
        let t = net.forward(0.3).unwrap();
        for (z, h) in t.preacts.iter().zip(&t.hidden) {
            for (zi, hi) in z.iter().zip(h) {
                assert_eq!(net.activation.apply(*zi), *hi);
            }
        }
        assert_eq!(t.output, net.output(0.3));
        assert_eq!(t.stacked_hidden().len(), net.total_hidden_width());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut net = single_neuron(Activation::Tanh, 1.0, 0.0, 1.0, 0.0);
        assert!(matches!(net.forward(f64::NAN), Err(NetError::NonFinite(_))));
        net.beta = f64::INFINITY;
        assert!(net.forward(0.0).is_err());
        let bad = NetworkParams {
            activation: Activation::Tanh,
            layers: vec![Layer::new(2, 1, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap()],
            alpha: vec![1.0],
            beta: 0.0,
        };
        assert!(matches!(bad.validate(), Err(NetError::Shape(_))));
        assert!(single_neuron(Activation::Tanh, 1.0, 0.0, 1.0, 0.0).gradient(&[]).is_err());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let net = single_neuron(Activation::Tanh, 0.7, 0.0, 1.3, 0.0);
        let (loss, g) = net.gradient(&[(0.0, 0.0)]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|&v| v == 0.0));

        let net = NetworkParams::init(&[4, 3], Activation::Sigmoid, 2).unwrap();
        let batch: Vec<(f64, f64)> = [-1.0, 0.2, 0.9].iter().map(|&x| (x, net.output(x))).collect();
        let (loss, g) = net.gradient(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flatten_assign_round_trip() {
        let net = NetworkParams::init(&[2, 3, 2], Activation::Tanh, 5).unwrap();
        let flat = net.flatten();
        assert_eq!(flat.len(), net.n_params());
        let mut other = NetworkParams::init(&[2, 3, 2], Activation::Tanh, 6).unwrap();
        other.assign(&flat);
        assert_eq!(other, net);
    }

    #[test]
    fn glorot_init_bounds() {
        let net = NetworkParams::init(&[16, 16], Activation::Sigmoid, 0).unwrap();
        let lim1 = (6.0f64 / 17.0).sqrt();
        assert!(net.layers[0].weights.iter().all(|w| w.abs() <= lim1));
        let lim2 = (6.0f64 / 32.0).sqrt();
        assert!(net.layers[1].weights.iter().all(|w| w.abs() <= lim2));
        assert!(net.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        assert_eq!(net.total_hidden_width(), 32);
    }
}
