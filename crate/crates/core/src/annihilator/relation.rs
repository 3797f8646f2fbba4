//! Numerical elimination: polynomial relations among the jets `H_0 … H_k`.
//!
//! Hidden states are sampled i.i.d. uniform in the activation box shrunk by
//! [`SAMPLE_MARGIN`] per side; every monomial of the basis is evaluated at
//! the jet tuples; columns are scaled to unit norm; a relation exists when
//! the smallest singular value falls below `tol` times the largest. The
//! returned polynomial is the de-scaled unit-norm right singular vector and
//! is re-checked on a fresh sample.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnnihilatorError, JetChain};
use crate::linalg::{prune_roundoff, NullspaceFit};
use crate::net::Activation;
use crate::poly::{monomial_basis, Monomial, MultiPoly};
use crate::seed;

pub const SAMPLE_MARGIN: f64 = 0.05;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_DEGREE_CAP: u32 = 4;
pub const DEFAULT_SAMPLES_FACTOR: usize = 5;
/// Number of trailing singular values kept in reports.
const TAIL: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    /// Polynomial in `T_0 … T_order` (variables `x0 …` in text form).
    pub poly: MultiPoly,
    pub order: usize,
    pub degree: u32,
    /// `σ_min / σ_max` of the scaled design matrix.
    pub ratio: f64,
    /// Trailing singular values of the scaled design matrix, ascending.
    pub singular_tail: Vec<f64>,
    /// `max |P(H_0, …, H_order)|` over the verification sample.
    pub residual_max: f64,
}

/// One `(order, degree)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub order: usize,
    pub degree: u32,
    pub ratio: f64,
    pub found: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSearch {
    pub relation: Option<Relation>,
    pub attempts: Vec<Attempt>,
}

fn sample_box(act: Activation) -> (f64, f64) {
    let (lo, hi) = act.range();
    (lo + SAMPLE_MARGIN, hi - SAMPLE_MARGIN)
}

#[allow(clippy::too_many_arguments)]
fn jet_rows(
    chain: &JetChain,
    act: Activation,
    n_vars: usize,
    order: usize,
    count: usize,
    seed: u64,
    stream: &str,
    cell: (usize, u32),
) -> Vec<Vec<f64>> {
    let (lo, hi) = sample_box(act);
    let mut rng = seed::rng_for(seed, &[seed::tag(stream), cell.0 as u64, cell.1 as u64]);
    let mut y = vec![0.0; n_vars];
    (0..count)
        .map(|_| {
            for v in &mut y {
                *v = rng.random_range(lo..hi);
            }
            chain.eval(&y, order)
        })
        .collect()
}

/// Searches for `P(T_0, …, T_order)` of total degree `≤ degree` vanishing on
/// the jets. `n_vars` and `activation` describe the hidden state the chain
/// is written in.
#[allow(clippy::too_many_arguments)]
pub fn find_relation(
    chain: &JetChain,
    activation: Activation,
    n_vars: usize,
    order: usize,
    degree: u32,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<(Option<Relation>, f64), AnnihilatorError> {
    if order > chain.max_order() {
        return Err(AnnihilatorError::Invalid(format!(
            "order {order} exceeds the jet chain length {}",
            chain.max_order()
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(AnnihilatorError::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let basis = monomial_basis(order + 1, degree);
    if samples < basis.len() {
        return Err(AnnihilatorError::Underdetermined {
            samples,
            basis: basis.len(),
        });
    }
    let jets = jet_rows(chain, activation, n_vars, order, samples, seed, "relation-fit", (order, degree));
    let rows: Vec<Vec<f64>> = jets.iter().map(|j| basis.iter().map(|m| m.eval(j)).collect()).collect();
    // Jets are exact polynomials: only an identically zero jet gives a zero column.
    let fit = NullspaceFit::with_floor(&rows, basis.len(), 0.0);
    let ratio = fit.ratio();
    if ratio >= tol {
        return Ok((None, ratio));
    }
    let coeffs = prune_roundoff(fit.descale(fit.vectors.last().expect("non-empty basis")));
    let poly = MultiPoly::from_coefficients(order + 1, &basis, &coeffs)?;

    let check = jet_rows(chain, activation, n_vars, order, samples, seed, "relation-verify", (order, degree));
    let residual_max = check
        .iter()
        .map(|j| poly.eval_unchecked(j).abs())
        .fold(0.0, f64::max);
    if residual_max >= 10.0 * tol {
        log::debug!(
            "order {order} degree {degree}: null direction (ratio {ratio:.3e}) fails verification \
             with residual {residual_max:.3e}"
        );
        return Ok((None, ratio));
    }
    Ok((
        Some(Relation {
            poly,
            order,
            degree,
            ratio,
            singular_tail: fit.tail(TAIL),
            residual_max,
        }),
        ratio,
    ))
}

/// Sweeps `order = 0..=order_max` (outer) and `degree = 1..=degree_cap`
/// (inner) and stops at the first relation.
#[allow(clippy::too_many_arguments)]
pub fn minimal_annihilator(
    chain: &JetChain,
    activation: Activation,
    n_vars: usize,
    order_max: usize,
    degree_cap: u32,
    samples_factor: usize,
    tol: f64,
    seed: u64,
) -> Result<RelationSearch, AnnihilatorError> {
    let order_max = order_max.min(chain.max_order());
    let mut attempts = Vec::new();
    for order in 0..=order_max {
        for degree in 1..=degree_cap {
            let samples = samples_factor * monomial_basis(order + 1, degree).len();
            let (relation, ratio) = find_relation(chain, activation, n_vars, order, degree, samples, tol, seed)?;
            attempts.push(Attempt {
                order,
                degree,
                ratio,
                found: relation.is_some(),
            });
            if relation.is_some() {
                return Ok(RelationSearch { relation, attempts });
            }
        }
    }
    Ok(RelationSearch {
        relation: None,
        attempts,
    })
}

/// `|P(c, 0, …, 0)|`.
pub fn constant_residual(poly: &MultiPoly, c: f64) -> f64 {
    let mut point = vec![0.0; poly.n_vars()];
    point[0] = c;
    poly.eval_unchecked(&point).abs()
}

/// Monomial in the jet variables, for building expected relations in tests
/// and reports.
pub fn jet_monomial(order: usize, exponents: &[(usize, u32)]) -> Monomial {
    let mut e = vec![0; order + 1];
    for &(v, p) in exponents {
        e[v] += p;
    }
    Monomial::new(e)
}
