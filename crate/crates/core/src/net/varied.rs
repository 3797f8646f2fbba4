use serde::{Deserialize, Serialize};

use super::{Activation, Buffers, Gradient, NetError, NetworkParams};
use crate::seed;

/// Trainable linear combination of MLPs with pairwise-distinct depths:
/// `f(x) = Σ_j combination[j] · subnet_j(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariedDepthNet {
    pub subnets: Vec<NetworkParams>,
    pub combination: Vec<f64>,
}

/// Builds subnets of the given depths, each `width` wide. Subnet `j` is
/// initialized from its own derived seed; mixing weights start at `1/len`.
pub fn build_varied_depth(
    depths: &[usize],
    width: usize,
    activation: Activation,
    seed: u64,
) -> Result<VariedDepthNet, NetError> {
    if depths.is_empty() {
        return Err(NetError::Config("at least one subnet depth is required".into()));
    }
    if width == 0 {
        return Err(NetError::Config("width must be positive".into()));
    }
    for (i, &d) in depths.iter().enumerate() {
        if d == 0 {
            return Err(NetError::Config("subnet depth must be at least 1".into()));
        }
        if depths[..i].contains(&d) {
            return Err(NetError::Config(format!("duplicate subnet depth {d}")));
        }
    }
    let subnets = depths
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let sub_seed = seed::derive_seed(seed, &[seed::tag("subnet"), j as u64]);
            NetworkParams::init(&vec![width; d], activation, sub_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = depths.len() as f64;
    Ok(VariedDepthNet {
        subnets,
        combination: vec![1.0 / n; depths.len()],
    })
}

impl VariedDepthNet {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.subnets.is_empty() || self.subnets.len() != self.combination.len() {
            return Err(NetError::Shape(format!(
                "{} subnets but {} mixing weights",
                self.subnets.len(),
                self.combination.len()
            )));
        }
        for (i, s) in self.subnets.iter().enumerate() {
            s.validate()?;
            if self.subnets[..i].iter().any(|o| o.depth() == s.depth()) {
                return Err(NetError::Shape(format!("duplicate subnet depth {}", s.depth())));
            }
        }
        if !self.combination.iter().all(|c| c.is_finite()) {
            return Err(NetError::NonFinite("mixing weight".into()));
        }
        Ok(())
    }

    pub fn depths(&self) -> Vec<usize> {
        self.subnets.iter().map(NetworkParams::depth).collect()
    }

    pub fn forward(&self, x: f64) -> Result<f64, NetError> {
        if !x.is_finite() {
            return Err(NetError::NonFinite(format!("input {x}")));
        }
        self.validate()?;
        Ok(self.output(x))
    }

    /// Combined output without validation.
    pub fn output(&self, x: f64) -> f64 {
        self.subnets
            .iter()
            .zip(&self.combination)
            .map(|(s, c)| c * s.output(x))
            .sum()
    }

    pub fn n_params(&self) -> usize {
        self.subnets.iter().map(NetworkParams::n_params).sum::<usize>() + self.combination.len()
    }

    /// Subnet parameters in order, then the mixing weights.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for s in &self.subnets {
            out.extend(s.flatten());
        }
        out.extend_from_slice(&self.combination);
        out
    }

    pub fn assign(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length");
        let mut pos = 0;
        for s in &mut self.subnets {
            let n = s.n_params();
            s.assign(&flat[pos..pos + n]);
            pos += n;
        }
        self.combination.copy_from_slice(&flat[pos..]);
    }

    /// MSE of the combined output and its gradient in [`flatten`](Self::flatten) layout.
    pub fn gradient(&self, batch: &[(f64, f64)]) -> Result<(f64, Vec<f64>), NetError> {
        if batch.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        self.validate()?;
        Ok(self.loss_and_gradient_unchecked(batch))
    }

    pub(crate) fn loss_and_gradient_unchecked(&self, batch: &[(f64, f64)]) -> (f64, Vec<f64>) {
        let n = batch.len() as f64;
        let mut grads: Vec<Gradient> = self.subnets.iter().map(Gradient::zeros_like).collect();
        let mut bufs: Vec<Buffers> = self.subnets.iter().map(Buffers::new).collect();
        let mut outs = vec![0.0; self.subnets.len()];
        let mut gcomb = vec![0.0; self.subnets.len()];
        let mut loss = 0.0;
        for &(x, y) in batch {
            let mut f = 0.0;
            for (j, s) in self.subnets.iter().enumerate() {
                outs[j] = s.output_with(x, &mut bufs[j]);
                f += self.combination[j] * outs[j];
            }
            let r = f - y;
            loss += r * r;
            let dl_df = 2.0 * r / n;
            for (j, s) in self.subnets.iter().enumerate() {
                gcomb[j] += dl_df * outs[j];
                s.backward_sample(x, dl_df * self.combination[j], &mut grads[j], &mut bufs[j]);
            }
        }
        let mut flat = Vec::with_capacity(self.n_params());
        for g in &grads {
            flat.extend(g.flatten());
        }
        flat.extend(gcomb);
        (loss / n, flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_shapes() {
        let net = build_varied_depth(&[1, 2, 3], 16, Activation::Sigmoid, 0).unwrap();
        assert_eq!(net.subnets.len(), 3);
        let ms: Vec<usize> = net.subnets.iter().map(|s| s.total_hidden_width()).collect();
        assert_eq!(ms, vec![16, 32, 48]);
        assert!(net.combination.iter().all(|&c| (c - 1.0 / 3.0).abs() < 1e-15));
        assert_ne!(net.subnets[0].layers[0].weights, net.subnets[1].layers[0].weights);

        let tiny = build_varied_depth(&[1], 1, Activation::Tanh, 0).unwrap();
        assert_eq!(tiny.subnets[0].total_hidden_width(), 1);
        assert_eq!(tiny.n_params(), 4 + 1);
    }

    #[test]
    fn rejects_duplicate_depths() {
        assert!(matches!(
            build_varied_depth(&[2, 2], 4, Activation::Tanh, 0),
            Err(NetError::Config(_))
        ));
        assert!(build_varied_depth(&[], 4, Activation::Tanh, 0).is_err());
        assert!(build_varied_depth(&[0, 1], 4, Activation::Tanh, 0).is_err());
    }

    #[test]
    fn combination_selects_subnets() {
        let mut net = build_varied_depth(&[1, 2, 3], 4, Activation::Tanh, 9).unwrap();
        net.combination = vec![1.0, 0.0, 0.0];
        for &x in &[-2.0, 0.1, 3.0] {
            assert_eq!(net.forward(x).unwrap(), net.subnets[0].output(x));
        }
        net.combination = vec![0.0; 3];
        assert_eq!(net.forward(0.4).unwrap(), 0.0);
    }
}
