use serde::{Deserialize, Serialize};

use super::{UniformSamples, VariabilityError};
use crate::fd::{grid_derivatives, GridDerivatives};
use crate::linalg::NullspaceFit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub max_order_tested: usize,
    /// Monic operator `D^r + c_r D^{r−1} + … + c₁` as `[c₁, …, c_r]`.
    pub operator: Option<Vec<f64>>,
    /// `σ_min / σ_max` per tested order, starting at order 1.
    pub ratios: Vec<f64>,
    /// `sup |T f_j|` on the grid, per block, for the returned operator.
    pub block_residuals: Vec<f64>,
}

/// Applies `[c₁, …, c_r]` (monic) to derivative tables at covered point `i`.
pub(crate) fn apply_operator(c: &[f64], d: &GridDerivatives, i: usize) -> f64 {
    let r = c.len();
    d.table[r][i] + c.iter().enumerate().map(|(k, ck)| ck * d.table[k][i]).sum::<f64>()
}

/// Lowest-order monic linear operator annihilating every block, searched
/// for orders `1..=max_order`.
pub fn common_annihilator(
    blocks: &[UniformSamples],
    max_order: usize,
    tol: f64,
    accuracy: usize,
) -> Result<DeficitReport, VariabilityError> {
    if blocks.is_empty() {
        return Err(VariabilityError::Invalid("need at least one block".into()));
    }
    if max_order == 0 {
        return Err(VariabilityError::Invalid("max_order must be at least 1".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(VariabilityError::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let (n, h) = (blocks[0].len(), blocks[0].step);
    if blocks.iter().any(|b| b.len() != n || (b.step - h).abs() > 1e-12 * h) {
        return Err(VariabilityError::Invalid("blocks must share one grid".into()));
    }
    let tables: Vec<GridDerivatives> = blocks
        .iter()
        .map(|b| grid_derivatives(&b.values, h, max_order, accuracy))
        .collect::<Result<_, _>>()?;
    let mut ratios = Vec::new();
    for order in 1..=max_order {
        let rows: Vec<Vec<f64>> = tables
            .iter()
            .flat_map(|d| (0..d.len()).map(move |i| (0..=order).map(|k| d.table[k][i]).collect()))
            .collect();
        if rows.len() < order + 1 {
            return Err(VariabilityError::Invalid("grid too short for the requested order".into()));
        }
        let fit = NullspaceFit::new(&rows, order + 1);
        let ratio = fit.ratio();
        ratios.push(ratio);
        if ratio >= tol {
            continue;
        }
        let v = fit.descale(fit.vectors.last().expect("non-empty"));
        let top = v[order];
        if top.abs() < 1e-8 {
            continue;
        }
        let operator: Vec<f64> = v[..order].iter().map(|x| x / top).collect();
        let block_residuals = tables
            .iter()
            .map(|d| (0..d.len()).map(|i| apply_operator(&operator, d, i).abs()).fold(0.0, f64::max))
            .collect();
        return Ok(DeficitReport {
            max_order_tested: order,
            operator: Some(operator),
            ratios,
            block_residuals,
        });
    }
    Ok(DeficitReport {
        max_order_tested: max_order,
        operator: None,
        ratios,
        block_residuals: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn block(f: fn(f64) -> f64) -> UniformSamples {
        UniformSamples::from_fn(f, 0.0, 2.0 * PI, 629).unwrap()
    }

    #[test]
    fn sine_and_cosine_share_the_oscillator() {
        let r = common_annihilator(&[block(f64::sin), block(f64::cos)], 2, 1e-8, 6).unwrap();
        let op = r.operator.unwrap();
        assert!((op[0] - 1.0).abs() < 1e-6 && op[1].abs() < 1e-6, "{op:?}");
        assert!(r.block_residuals.iter().all(|&e| e < 1e-5));
    }

    #[test]
    fn sine_and_exponential_need_order_three() {
        let blocks = [block(f64::sin), block(f64::exp)];
        assert!(common_annihilator(&blocks, 2, 1e-8, 6).unwrap().operator.is_none());
        let op = common_annihilator(&blocks, 3, 1e-8, 6).unwrap().operator.unwrap();
        // (D² + 1)(D − 1) = D³ − D² + D − 1
        for (a, b) in op.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((a - b).abs() < 1e-5, "{op:?}");
        }
    }

    #[test]
    fn growth_rate_two() {
        let b = UniformSamples::from_fn(|x| (2.0 * x).exp(), 0.0, 1.0, 201).unwrap();
        let op = common_annihilator(&[b], 1, 1e-8, 6).unwrap().operator.unwrap();
        assert!((op[0] + 2.0).abs() < 1e-6);
    }
}
