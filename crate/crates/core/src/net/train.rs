//! Full-batch (or mini-batch) Adam with chronological early stopping.

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{NetError, NetworkParams, VariedDepthNet};
use crate::seed;

/// Anything trainable by [`train`].
pub trait Model: Clone + Send + Sync {
    fn predict(&self, x: f64) -> f64;
    fn n_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, flat: &[f64]);
    /// MSE and gradient in `params()` layout. `batch` is non-empty and the
    /// model has been validated.
    fn loss_and_gradient(&self, batch: &[(f64, f64)]) -> (f64, Vec<f64>);
    fn validate(&self) -> Result<(), NetError>;
    /// Mean squared error over `data` (0 for empty data).
    fn mse(&self, data: &[(f64, f64)]) -> f64 {
        mse_by(|x| self.predict(x), data)
    }
}

impl Model for NetworkParams {
    fn predict(&self, x: f64) -> f64 {
        self.output(x)
    }
    fn n_params(&self) -> usize {
        NetworkParams::n_params(self)
    }
    fn params(&self) -> Vec<f64> {
        self.flatten()
    }
    fn set_params(&mut self, flat: &[f64]) {
        self.assign(flat)
    }
    fn loss_and_gradient(&self, batch: &[(f64, f64)]) -> (f64, Vec<f64>) {
        let mut grad = super::Gradient::zeros_like(self);
        let mut buf = super::Buffers::new(self);
        let loss = self.accumulate_gradient(batch, 1.0, &mut grad, &mut buf);
        (loss, grad.flatten())
    }
    fn validate(&self) -> Result<(), NetError> {
        NetworkParams::validate(self)
    }
    fn mse(&self, data: &[(f64, f64)]) -> f64 {
        let mut buf = super::Buffers::new(self);
        mse_by(|x| self.output_with(x, &mut buf), data)
    }
}

impl Model for VariedDepthNet {
    fn predict(&self, x: f64) -> f64 {
        self.output(x)
    }
    fn n_params(&self) -> usize {
        VariedDepthNet::n_params(self)
    }
    fn params(&self) -> Vec<f64> {
        self.flatten()
    }
    fn set_params(&mut self, flat: &[f64]) {
        self.assign(flat)
    }
    fn loss_and_gradient(&self, batch: &[(f64, f64)]) -> (f64, Vec<f64>) {
        self.loss_and_gradient_unchecked(batch)
    }
    fn validate(&self) -> Result<(), NetError> {
        VariedDepthNet::validate(self)
    }
    fn mse(&self, data: &[(f64, f64)]) -> f64 {
        let mut bufs: Vec<_> = self.subnets.iter().map(super::Buffers::new).collect();
        mse_by(
            |x| {
                self.subnets
                    .iter()
                    .zip(&self.combination)
                    .zip(bufs.iter_mut())
                    .map(|((s, c), b)| c * s.output_with(x, b))
                    .sum()
            },
            data,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchPolicy {
    FullBatch,
    MiniBatch(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch: BatchPolicy,
    /// Trailing fraction of the (chronologically ordered) data held out.
    pub validation_fraction: f64,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            max_epochs: 20_000,
            batch: BatchPolicy::FullBatch,
            validation_fraction: 0.2,
            patience: 200,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NetError::Config("learning_rate must be positive".into()));
        }
        if self.max_epochs == 0 {
            return Err(NetError::Config("max_epochs must be at least 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(NetError::Config("validation_fraction must lie in (0, 1)".into()));
        }
        if self.patience == 0 {
            return Err(NetError::Config("patience must be at least 1".into()));
        }
        if let BatchPolicy::MiniBatch(0) = self.batch {
            return Err(NetError::Config("mini-batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(NetError::Config("Adam moments need beta in [0, 1) and epsilon > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Parameters at `best_epoch`.
    pub model: M,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: Vec<EpochLoss>,
    pub stopped_early: bool,
    /// Set when a loss became non-finite; training stops at that epoch.
    pub diverged: bool,
    pub warnings: Vec<String>,
}

/// Trains `init` on `data`, holding out the trailing `validation_fraction`
/// as validation. Each history entry holds the losses of the parameters
/// *before* that epoch's update, so the returned model is exactly the one
/// scored by `best_val_loss`.
pub fn train<M: Model>(init: M, data: &[(f64, f64)], cfg: &TrainConfig) -> Result<TrainOutcome<M>, NetError> {
    cfg.validate()?;
    init.validate()?;
    let n = data.len();
    let n_val = ((cfg.validation_fraction * n as f64).floor() as usize).max(1);
    if n < 2 || n_val >= n {
        return Err(NetError::Dataset(format!(
            "{n} points cannot be split into non-empty training and validation sets"
        )));
    }
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(NetError::NonFinite("training data".into()));
    }
    let (fit, val) = data.split_at(n - n_val);

    let mut warnings = Vec::new();
    if data.iter().all(|(x, _)| *x == data[0].0) {
        let msg = format!("all {n} inputs are identical (x = {}); the fit is degenerate", data[0].0);
        warn!("{msg}");
        warnings.push(msg);
    }

    let mut model = init;
    let mut params = model.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut step: i32 = 0;
    let mut rng = seed::rng_for(cfg.seed, &[seed::tag("minibatch")]);
    let mut order: Vec<usize> = (0..fit.len()).collect();

    let mut best = (f64::INFINITY, 0usize, params.clone());
    let mut history = Vec::new();
    let mut diverged = false;
    let mut stopped_early = false;

    for epoch in 0..cfg.max_epochs {
        let scored = params.clone();
        let val_loss = model.mse(val);
        let train_loss = match cfg.batch {
            BatchPolicy::FullBatch => {
                let (loss, grad) = model.loss_and_gradient(fit);
                if loss.is_finite() {
                    step += 1;
                    adam_step(&mut params, &grad, &mut m, &mut v, step, cfg);
                }
                loss
            }
            BatchPolicy::MiniBatch(size) => {
                let pre = model.mse(fit);
                order.shuffle(&mut rng);
                let mut batch = Vec::with_capacity(size);
                for chunk in order.chunks(size) {
                    batch.clear();
                    batch.extend(chunk.iter().map(|&i| fit[i]));
                    let (_, grad) = model.loss_and_gradient(&batch);
                    step += 1;
                    adam_step(&mut params, &grad, &mut m, &mut v, step, cfg);
                    model.set_params(&params);
                }
                pre
            }
        };
        history.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        if !train_loss.is_finite() || !val_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            diverged = true;
            break;
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, scored);
        } else if epoch - best.1 >= cfg.patience {
            stopped_early = true;
            break;
        }
        model.set_params(&params);
    }

    let (best_val_loss, best_epoch, best_params) = best;
    model.set_params(&best_params);
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_val_loss,
        history,
        stopped_early,
        diverged,
        warnings,
    })
}

fn mse_by(mut predict: impl FnMut(f64) -> f64, data: &[(f64, f64)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter()
        .map(|&(x, y)| {
            let r = predict(x) - y;
            r * r
        })
        .sum::<f64>()
        / data.len() as f64
}

fn adam_step(params: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], step: i32, cfg: &TrainConfig) {
    let bc1 = 1.0 - cfg.beta1.powi(step);
    let bc2 = 1.0 - cfg.beta2.powi(step);
    for i in 0..params.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_varied_depth, Activation};

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn fits_a_constant() {
        let data: Vec<(f64, f64)> = grid(50, -1.0, 1.0).into_iter().map(|x| (x, 0.7)).collect();
        let net = NetworkParams::init(&[4], Activation::Sigmoid, 1).unwrap();
        let cfg = TrainConfig {
            max_epochs: 3000,
            ..Default::default()
        };
        let out = train(net, &data, &cfg).unwrap();
        let final_train = out.model.mse(&data[..40]);
        assert!(final_train < 1e-4, "train mse {final_train}");
        assert!((out.model.predict(0.0) - 0.7).abs() < 1e-2);
    }

    #[test]
    fn early_stopping_triggers_on_overfitting_run() {
        // Validation targets contradict the training trend, so validation
        // loss stops improving quickly while the training loss keeps falling.
        let mut data: Vec<(f64, f64)> = grid(40, -1.0, 1.0).into_iter().map(|x| (x, x)).collect();
        for p in data.iter_mut().skip(32) {
            p.1 = -5.0;
        }
        let net = NetworkParams::init(&[8], Activation::Tanh, 3).unwrap();
        let cfg = TrainConfig {
            max_epochs: 5000,
            patience: 20,
            ..Default::default()
        };
        let out = train(net, &data, &cfg).unwrap();
        assert!(out.stopped_early);
        assert!(out.best_epoch < cfg.max_epochs);
        assert!(out.history.len() < cfg.max_epochs);
        assert_eq!(out.history.len(), out.best_epoch + cfg.patience + 1);
    }

    #[test]
    fn degenerate_inputs_warn_but_train() {
        let data: Vec<(f64, f64)> = (0..10).map(|i| (0.5, i as f64 * 0.1)).collect();
        let net = NetworkParams::init(&[2], Activation::Tanh, 0).unwrap();
        let cfg = TrainConfig {
            max_epochs: 10,
            ..Default::default()
        };
        let out = train(net, &data, &cfg).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.history.len(), 10);
    }

    #[test]
    fn rejects_bad_config_and_tiny_data() {
        let net = NetworkParams::init(&[2], Activation::Tanh, 0).unwrap();
        let cfg = TrainConfig {
            patience: 0,
            ..Default::default()
        };
        assert!(matches!(train(net.clone(), &[(0.0, 0.0), (1.0, 1.0)], &cfg), Err(NetError::Config(_))));
        assert!(matches!(
            train(net.clone(), &[(0.0, 0.0)], &TrainConfig::default()),
            Err(NetError::Dataset(_))
        ));
        let cfg = TrainConfig {
            validation_fraction: 1.0,
            ..Default::default()
        };
        assert!(train(net, &[(0.0, 0.0), (1.0, 1.0)], &cfg).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<(f64, f64)> = grid(60, -1.0, 1.0).into_iter().map(|x| (x, (3.0 * x).sin())).collect();
        let cfg = TrainConfig {
            max_epochs: 200,
            batch: BatchPolicy::MiniBatch(16),
            seed: 4,
            ..Default::default()
        };
        let a = train(build_varied_depth(&[1, 2], 4, Activation::Sigmoid, 4).unwrap(), &data, &cfg).unwrap();
        let b = train(build_varied_depth(&[1, 2], 4, Activation::Sigmoid, 4).unwrap(), &data, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
    }
}
