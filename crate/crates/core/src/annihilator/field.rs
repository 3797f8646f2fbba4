use serde::{Deserialize, Serialize};

use super::AnnihilatorError;
use crate::net::{Activation, NetworkParams};
use crate::poly::{MultiPoly, PolyError};

/// Polynomial vector field `F` with `Y′(x) = F(Y(x))`, where `Y` stacks the
/// hidden activations `(h¹, …, hᴸ)` of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenVectorField {
    pub n_vars: usize,
    pub activation: Activation,
    pub components: Vec<MultiPoly>,
    /// Index of the first variable of each layer.
    pub layer_offsets: Vec<usize>,
    pub widths: Vec<usize>,
}

/// `P(y) = 1 − y²` (tanh) or `y − y²` (sigmoid) in variable `var`.
pub fn derivative_factor(act: Activation, n_vars: usize, var: usize) -> Result<MultiPoly, PolyError> {
    let y = MultiPoly::var(n_vars, var)?;
    let y2 = y.mul(&y)?;
    match act {
        Activation::Tanh => MultiPoly::constant(n_vars, 1.0).sub(&y2),
        Activation::Sigmoid => y.sub(&y2),
    }
}

/// Builds `F` layer by layer: `F_j = w_j P(Y_j)` on the first layer and
/// `F_k = Q(Y_k) Σ_j W_kj F_j` on deeper ones. Fails when `M` exceeds `cap`.
pub fn hidden_vector_field(net: &NetworkParams, cap: usize) -> Result<HiddenVectorField, AnnihilatorError> {
    net.validate()?;
    let m = net.total_hidden_width();
    if m > cap {
        return Err(AnnihilatorError::Capacity(format!(
            "network has M = {m} hidden units, above the cap of {cap}; probe a smaller network"
        )));
    }
    let act = net.activation;
    let mut components: Vec<MultiPoly> = Vec::with_capacity(m);
    let mut layer_offsets = Vec::with_capacity(net.depth());
    let mut offset = 0;
    for (l, layer) in net.layers.iter().enumerate() {
        layer_offsets.push(offset);
        for r in 0..layer.rows {
            let var = offset + r;
            let factor = derivative_factor(act, m, var)?;
            let comp = if l == 0 {
                factor.scale(layer.weights[r])
            } else {
                let prev_offset = layer_offsets[l - 1];
                let mut lin = MultiPoly::zero(m);
                for c in 0..layer.cols {
                    lin = lin.add(&components[prev_offset + c].scale(layer.weight(r, c)))?;
                }
                factor.mul(&lin)?
            };
            components.push(comp);
        }
        offset += layer.rows;
    }
    Ok(HiddenVectorField {
        n_vars: m,
        activation: act,
        components,
        layer_offsets,
        widths: net.widths(),
    })
}

impl HiddenVectorField {
    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>, AnnihilatorError> {
        self.components.iter().map(|c| c.eval(y).map_err(Into::into)).collect()
    }

    /// Variables of the last hidden layer.
    pub fn last_layer(&self) -> std::ops::Range<usize> {
        let start = *self.layer_offsets.last().expect("at least one layer");
        start..self.n_vars
    }
}

/// Jets `H_0 … H_kmax` as polynomials in the hidden state:
/// `H_0 = α·Y_L + β`, `H_{k+1} = ∇H_k · F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetChain {
    pub h: Vec<MultiPoly>,
}

impl JetChain {
    pub fn max_order(&self) -> usize {
        self.h.len() - 1
    }

    /// `(H_0(y), …, H_order(y))`.
    pub fn eval(&self, y: &[f64], order: usize) -> Vec<f64> {
        self.h[..=order].iter().map(|p| p.eval_unchecked(y)).collect()
    }
}

/// Default bound on the number of terms of a single `H_k`.
pub const DEFAULT_TERM_BUDGET: usize = 200_000;

pub fn jet_chain(
    field: &HiddenVectorField,
    alpha: &[f64],
    beta: f64,
    k_max: usize,
    term_budget: usize,
) -> Result<JetChain, AnnihilatorError> {
    let last = field.last_layer();
    if alpha.len() != last.len() {
        return Err(AnnihilatorError::Invalid(format!(
            "readout has {} weights but the last layer has {} units",
            alpha.len(),
            last.len()
        )));
    }
    if k_max > field.n_vars {
        return Err(AnnihilatorError::Invalid(format!(
            "k_max = {k_max} exceeds M = {}",
            field.n_vars
        )));
    }
    let n = field.n_vars;
    let mut h0 = MultiPoly::constant(n, beta);
    for (a, var) in alpha.iter().zip(last) {
        h0 = h0.add(&MultiPoly::var(n, var)?.scale(*a))?;
    }
    let mut h = vec![h0];
    for k in 0..k_max {
        let prev = &h[k];
        let mut next = MultiPoly::zero(n);
        for (i, fi) in field.components.iter().enumerate() {
            let d = prev.partial(i)?;
            if d.is_zero() {
                continue;
            }
            next = next.add(&d.mul(fi)?)?;
            if next.n_terms() > term_budget {
                return Err(AnnihilatorError::Capacity(format!(
                    "H_{} exceeds the term budget of {term_budget}",
                    k + 1
                )));
            }
        }
        h.push(next);
    }
    Ok(JetChain { h })
}
