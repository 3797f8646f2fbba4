//! Polynomial ODEs satisfied by small MLPs.
//!
//! The stacked hidden state `Y(x)` of an MLP obeys an autonomous polynomial
//! ODE `Y′ = F(Y)`. Each derivative of the output is then a polynomial
//! `H_k(Y)`, and any polynomial relation among `H_0 … H_k` is an ODE
//! satisfied by the network. Relations are found numerically; equilibria of
//! `F` give the constant solutions approached outside the training window.

mod constants;
mod field;
mod relation;
mod saturation;
mod verify;

pub use constants::{constant_solutions, first_layer_saturations, saturated_state, DEFAULT_FIRST_LAYER_CAP};
pub use field::{derivative_factor, hidden_vector_field, jet_chain, HiddenVectorField, JetChain, DEFAULT_TERM_BUDGET};
pub use relation::{
    constant_residual, find_relation, jet_monomial, minimal_annihilator, Attempt, Relation, RelationSearch,
    DEFAULT_DEGREE_CAP, DEFAULT_SAMPLES_FACTOR, DEFAULT_TOL, SAMPLE_MARGIN,
};
pub use saturation::{saturation_profile, SaturationProfile, TailFit, DEFAULT_GRID, DEFAULT_PROBE_MULTIPLIER, DEVIATION_FLOOR};
pub use verify::{uniform_grid, verify_annihilator, VerificationReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{ModelParams, NetError, NetworkParams};
use crate::poly::PolyError;

pub const DEFAULT_HIDDEN_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnihilatorError {
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("{samples} samples cannot determine a basis of {basis} monomials")]
    Underdetermined { samples: usize, basis: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnihilatorConfig {
    pub hidden_cap: usize,
    pub first_layer_cap: usize,
    pub degree_cap: u32,
    /// Highest derivative order searched; `None` means the hidden width `M`.
    pub order_max: Option<usize>,
    pub samples_factor: usize,
    pub tol: f64,
    pub seed: u64,
    pub term_budget: usize,
    pub probe_multiplier: f64,
    pub probe_grid: usize,
    pub fd_step: f64,
    pub verify_points: usize,
}

impl Default for AnnihilatorConfig {
    fn default() -> Self {
        AnnihilatorConfig {
            hidden_cap: DEFAULT_HIDDEN_CAP,
            first_layer_cap: DEFAULT_FIRST_LAYER_CAP,
            degree_cap: DEFAULT_DEGREE_CAP,
            order_max: None,
            samples_factor: DEFAULT_SAMPLES_FACTOR,
            tol: DEFAULT_TOL,
            seed: 0,
            term_budget: DEFAULT_TERM_BUDGET,
            probe_multiplier: DEFAULT_PROBE_MULTIPLIER,
            probe_grid: DEFAULT_GRID,
            fd_step: 1e-3,
            verify_points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCheck {
    pub value: f64,
    /// `|P(c, 0, …, 0)|` when a relation was found.
    pub residual: Option<f64>,
}

/// Analysis of one MLP (a whole standard net, or one subnet of a varied net).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkAnnihilation {
    pub subnet: Option<usize>,
    pub widths: Vec<usize>,
    pub n_hidden: usize,
    pub relation: Option<Relation>,
    pub attempts: Vec<Attempt>,
    pub constants: Vec<ConstantCheck>,
    /// Limits of the output at −∞ and +∞ from saturated propagation.
    pub limits: (f64, f64),
    pub saturation: SaturationProfile,
    pub verification: Option<VerificationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnihilatorReport {
    pub networks: Vec<NetworkAnnihilation>,
    /// Tail profile of the full model output.
    pub saturation: SaturationProfile,
}

/// Runs discovery, constants, saturation and verification on one MLP, in
/// its own input coordinate with the training window `[-1, 1]`.
pub fn analyze_network(
    net: &NetworkParams,
    subnet: Option<usize>,
    cfg: &AnnihilatorConfig,
) -> Result<NetworkAnnihilation, AnnihilatorError> {
    let field = hidden_vector_field(net, cfg.hidden_cap)?;
    let m = field.n_vars;
    let order_max = cfg.order_max.map_or(m, |k| k.min(m));
    if order_max == 0 {
        return Err(AnnihilatorError::Invalid("order_max must be at least 1".into()));
    }
    let chain = jet_chain(&field, &net.alpha, net.beta, order_max, cfg.term_budget)?;
    let search = minimal_annihilator(
        &chain,
        net.activation,
        m,
        order_max,
        cfg.degree_cap,
        cfg.samples_factor,
        cfg.tol,
        cfg.seed,
    )?;
    let constants = constant_solutions(net, cfg.first_layer_cap)?
        .into_iter()
        .map(|value| ConstantCheck {
            value,
            residual: search.relation.as_ref().map(|r| constant_residual(&r.poly, value)),
        })
        .collect();
    let f = |u: f64| net.output(u);
    let saturation = saturation_profile(&f, (-1.0, 1.0), cfg.probe_multiplier, cfg.probe_grid)?;
    let verification = match &search.relation {
        Some(r) => {
            let grid = uniform_grid(-1.0, 1.0, cfg.verify_points);
            let reach = 2.0 + 2.0 * cfg.probe_multiplier;
            Some(verify_annihilator(&r.poly, &f, &grid, cfg.fd_step, (-reach, reach))?)
        }
        None => None,
    };
    Ok(NetworkAnnihilation {
        subnet,
        widths: net.widths(),
        n_hidden: m,
        relation: search.relation,
        attempts: search.attempts,
        constants,
        limits: (net.limit_at_infinity(-1.0), net.limit_at_infinity(1.0)),
        saturation,
        verification,
    })
}

/// Per-network analysis of a checkpointed model; varied-depth models are
/// handled one subnet at a time.
pub fn annihilate(model: &ModelParams, cfg: &AnnihilatorConfig) -> Result<AnnihilatorReport, AnnihilatorError> {
    model.validate()?;
    if !(cfg.tol > 0.0 && cfg.tol.is_finite()) {
        return Err(AnnihilatorError::Invalid(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let networks = match model {
        ModelParams::Standard(net) => vec![analyze_network(net, None, cfg)?],
        ModelParams::Varied(v) => v
            .subnets
            .iter()
            .enumerate()
            .map(|(j, net)| analyze_network(net, Some(j), cfg))
            .collect::<Result<_, _>>()?,
    };
    let saturation = saturation_profile(&|u: f64| model.predict(u), (-1.0, 1.0), cfg.probe_multiplier, cfg.probe_grid)?;
    Ok(AnnihilatorReport { networks, saturation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Activation, Layer};

    #[test]
    fn single_neuron_report() {
        let net = NetworkParams {
            activation: Activation::Tanh,
            layers: vec![Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap()],
            alpha: vec![1.0],
            beta: 0.0,
        };
        let report = annihilate(&ModelParams::Standard(net), &AnnihilatorConfig::default()).unwrap();
        let n = &report.networks[0];
        let rel = n.relation.as_ref().unwrap();
        assert_eq!((rel.order, rel.degree), (1, 2));
        assert!(n.verification.as_ref().unwrap().max_residual < 1e-6);
        for c in &n.constants {
            assert!(c.residual.unwrap() < 1e-7);
        }
        assert_eq!(n.limits, (-1.0, 1.0));
    }
}
