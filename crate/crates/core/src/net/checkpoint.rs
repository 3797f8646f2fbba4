//! JSON checkpoints. Floats are written in shortest round-trip form, so
//! `from_json(to_json(c)) == c` bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Model, NetError, NetworkParams, VariedDepthNet};

pub const CHECKPOINT_FORMAT: &str = "annlab.checkpoint.v1";

/// Affine map sending the training window `[lo, hi]` to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub lo: f64,
    pub hi: f64,
}

impl InputMap {
    pub fn new(lo: f64, hi: f64) -> Result<Self, NetError> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(NetError::Config(format!("invalid input window [{lo}, {hi}]")));
        }
        Ok(InputMap { lo, hi })
    }

    pub fn identity() -> Self {
        InputMap { lo: -1.0, hi: 1.0 }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0
    }

    pub fn denormalize(&self, u: f64) -> f64 {
        self.lo + (u + 1.0) * self.half_width()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Standard(NetworkParams),
    Varied(VariedDepthNet),
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), NetError> {
        match self {
            ModelParams::Standard(n) => n.validate(),
            ModelParams::Varied(v) => v.validate(),
        }
    }

    /// Output in the network's own (normalized) input coordinate.
    pub fn predict(&self, u: f64) -> f64 {
        match self {
            ModelParams::Standard(n) => n.predict(u),
            ModelParams::Varied(v) => v.predict(u),
        }
    }

    /// Limit of the output at +∞ (`direction > 0`) or −∞.
    pub fn limit_at_infinity(&self, direction: f64) -> f64 {
        match self {
            ModelParams::Standard(n) => n.limit_at_infinity(direction),
            ModelParams::Varied(v) => v
                .subnets
                .iter()
                .zip(&v.combination)
                .map(|(s, c)| c * s.limit_at_infinity(direction))
                .sum(),
        }
    }

    /// The MLPs making up the model: one for a standard net, one per subnet otherwise.
    pub fn networks(&self) -> Vec<&NetworkParams> {
        match self {
            ModelParams::Standard(n) => vec![n],
            ModelParams::Varied(v) => v.subnets.iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub model: ModelParams,
    /// Map from raw inputs to the network's input coordinate.
    pub input_map: InputMap,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new(model: ModelParams, input_map: InputMap) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            model,
            input_map,
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| NetError::Checkpoint(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(NetError::Checkpoint(format!(
                "unsupported format `{}` (expected `{CHECKPOINT_FORMAT}`)",
                ckpt.format
            )));
        }
        ckpt.model.validate()?;
        InputMap::new(ckpt.input_map.lo, ckpt.input_map.hi)?;
        Ok(ckpt)
    }

    /// Prediction at a raw input.
    pub fn predict_raw(&self, x: f64) -> f64 {
        self.model.predict(self.input_map.normalize(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_varied_depth, Activation};

    #[test]
    fn round_trip_is_exact() {
        let mut net = build_varied_depth(&[1, 3], 5, Activation::Sigmoid, 12).unwrap();
        net.combination = vec![0.1 + 0.2, -1.0 / 3.0];
        net.subnets[0].beta = 1e-300;
        let ckpt = Checkpoint::new(ModelParams::Varied(net), InputMap::new(-6.5, 6.5).unwrap());
        let text = ckpt.to_json();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_broken_checkpoints() {
        let net = NetworkParams::init(&[2], Activation::Tanh, 0).unwrap();
        let ckpt = Checkpoint::new(ModelParams::Standard(net), InputMap::identity());
        let text = ckpt.to_json().replace(CHECKPOINT_FORMAT, "other");
        assert!(Checkpoint::from_json(&text).is_err());
        let text = ckpt.to_json().replace("\"rows\": 2", "\"rows\": 3");
        assert!(matches!(Checkpoint::from_json(&text), Err(NetError::Shape(_))));
        assert!(Checkpoint::from_json("{").is_err());
    }

    #[test]
    fn input_map_round_trip() {
        let m = InputMap::new(0.0, 2499.0).unwrap();
        assert_eq!(m.normalize(0.0), -1.0);
        assert_eq!(m.normalize(2499.0), 1.0);
        assert!((m.denormalize(m.normalize(1234.5)) - 1234.5).abs() < 1e-9);
        assert!(InputMap::new(1.0, 1.0).is_err());
    }
}
