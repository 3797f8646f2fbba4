use super::AnnihilatorError;
use crate::net::{propagate_layer as propagate, NetworkParams};

pub const DEFAULT_FIRST_LAYER_CAP: usize = 16;
const MERGE_TOL: f64 = 1e-12;

/// Saturation vectors of the first layer, `S_φ^{m₁}`, in binary counting
/// order (bit `j` of the index selects the upper value for neuron `j`).
pub fn first_layer_saturations(net: &NetworkParams, cap: usize) -> Result<Vec<Vec<f64>>, AnnihilatorError> {
    net.validate()?;
    let m1 = net.layers[0].rows;
    if m1 > cap {
        return Err(AnnihilatorError::Capacity(format!(
            "first layer has {m1} neurons; enumerating 2^{m1} saturation vectors exceeds the cap of {cap}"
        )));
    }
    let [low, high] = net.activation.saturation_values();
    Ok((0..1usize << m1)
        .map(|mask| (0..m1).map(|j| if mask >> j & 1 == 1 { high } else { low }).collect())
        .collect())
}

/// The full stacked hidden state generated by a first-layer saturation vector.
pub fn saturated_state(net: &NetworkParams, first: &[f64]) -> Vec<f64> {
    let mut state = first.to_vec();
    let mut s = first.to_vec();
    for layer in &net.layers[1..] {
        s = propagate(layer, net.activation, &s);
        state.extend_from_slice(&s);
    }
    state
}

/// Constant values `α·s^(L) + β` reachable from first-layer saturation,
/// sorted with near-duplicates merged.
pub fn constant_solutions(net: &NetworkParams, cap: usize) -> Result<Vec<f64>, AnnihilatorError> {
    let m_last = net.alpha.len();
    let mut values: Vec<f64> = first_layer_saturations(net, cap)?
        .iter()
        .map(|first| {
            let state = saturated_state(net, first);
            let last = &state[state.len() - m_last..];
            net.alpha.iter().zip(last).map(|(a, s)| a * s).sum::<f64>() + net.beta
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(values.len());
    for v in values {
        match merged.last() {
            Some(&prev) if (v - prev).abs() <= MERGE_TOL => {}
            _ => merged.push(v),
        }
    }
    Ok(merged)
}
