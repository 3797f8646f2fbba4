use serde::{Deserialize, Serialize};

use super::AnnihilatorError;
use crate::fd;
use crate::poly::MultiPoly;

/// Residual of `P(f, f′, …, f^(order))` along a grid, with derivatives from
/// Richardson-extrapolated central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub n_points: usize,
    pub n_trimmed: usize,
    pub fd_step: f64,
    pub warnings: Vec<String>,
}

/// Evaluates `P` along `x_grid`. Points whose stencil leaves `domain` are
/// dropped with a warning.
pub fn verify_annihilator(
    p: &MultiPoly,
    f: &impl Fn(f64) -> f64,
    x_grid: &[f64],
    fd_step: f64,
    domain: (f64, f64),
) -> Result<VerificationReport, AnnihilatorError> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(AnnihilatorError::Invalid(format!("fd step must be positive, got {fd_step}")));
    }
    let order = p.n_vars().saturating_sub(1);
    let reach = fd::stencil_reach(order, fd_step);
    let (lo, hi) = domain;
    let kept: Vec<f64> = x_grid
        .iter()
        .copied()
        .filter(|x| x - reach >= lo && x + reach <= hi)
        .collect();
    let n_trimmed = x_grid.len() - kept.len();
    let mut warnings = Vec::new();
    if n_trimmed > 0 {
        let msg = format!(
            "{n_trimmed} grid points dropped: the order-{order} stencil (reach {reach:.3e}) leaves [{lo}, {hi}]"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if kept.is_empty() {
        return Err(AnnihilatorError::Invalid(
            "no grid point leaves room for the finite-difference stencil".into(),
        ));
    }
    let mut jet = vec![0.0; order + 1];
    let mut max_residual: f64 = 0.0;
    let mut sum = 0.0;
    for &x in &kept {
        for (k, slot) in jet.iter_mut().enumerate() {
            *slot = fd::derivative(f, x, k, fd_step);
        }
        let r = p.eval(&jet)?.abs();
        max_residual = max_residual.max(r);
        sum += r;
    }
    Ok(VerificationReport {
        max_residual,
        mean_residual: sum / kept.len() as f64,
        n_points: kept.len(),
        n_trimmed,
        fd_step,
        warnings,
    })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_relation() -> MultiPoly {
        MultiPoly::parse("-1 + 1 * x1 + 1 * x0^2", 2).unwrap()
    }

    #[test]
    fn exact_relation_has_small_residual() {
        let grid = uniform_grid(-3.0, 3.0, 121);
        let r = verify_annihilator(&tanh_relation(), &|x: f64| x.tanh(), &grid, 1e-3, (-10.0, 10.0)).unwrap();
        assert!(r.max_residual < 1e-6, "{}", r.max_residual);
        assert_eq!(r.n_trimmed, 0);
    }

    #[test]
    fn perturbed_relation_is_detected() {
        let p = MultiPoly::parse("-1 + 1.1 * x1 + 1 * x0^2", 2).unwrap();
        let grid = uniform_grid(-3.0, 3.0, 121);
        let r = verify_annihilator(&p, &|x: f64| x.tanh(), &grid, 1e-3, (-10.0, 10.0)).unwrap();
        assert!(r.max_residual > 1e-2);
    }

    #[test]
    fn trims_points_near_the_edge() {
        let grid = uniform_grid(-1.0, 1.0, 11);
        let r = verify_annihilator(&tanh_relation(), &|x: f64| x.tanh(), &grid, 1e-3, (-1.0, 1.0)).unwrap();
        assert_eq!(r.n_trimmed, 2);
        assert_eq!(r.warnings.len(), 1);
    }
}
