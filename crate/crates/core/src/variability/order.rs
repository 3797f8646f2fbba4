use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{UniformSamples, VariabilityError};
use crate::fd::grid_derivatives;
use crate::linalg::{prune_roundoff, unit_with_sign, NullspaceFit};
use crate::poly::{monomial_basis, Monomial, MultiPoly};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeFit {
    pub order: usize,
    /// Relation in `T_0 … T_order`, unit coefficient norm.
    pub poly: MultiPoly,
    pub ratio: f64,
    /// `max |P(f, f′, …)|` over the grid.
    pub residual_max: f64,
    /// Dimension of the numerical nullspace at the accepted order.
    pub null_dimension: usize,
}

/// Unit vector in the span of the null directions (given in original
/// coefficient coordinates) with the least weight on the coordinates marked
/// in `penalized`.
pub(crate) fn least_penalized(null: &[Vec<f64>], penalized: &[bool]) -> Vec<f64> {
    if null.len() == 1 {
        return unit_with_sign(null[0].clone());
    }
    let n = penalized.len();
    let u = DMatrix::from_fn(n, null.len(), |i, j| null[j][i]);
    let q = u.qr().q();
    let p = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| if penalized[i] { 1.0 } else { 0.0 }));
    let b = q.transpose() * p * &q;
    let eig = b.symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let v = q * eig.eigenvectors.column(best);
    unit_with_sign(v.iter().copied().collect())
}

/// Smallest `k ∈ 1..=max_order` with a polynomial relation of total degree
/// `≤ degree` among `(f, f′, …, f^(k))`, derivatives taken from the grid.
/// Among several null directions the one that depends most on `f^(k)` is kept.
pub fn minimal_ode_order(
    samples: &UniformSamples,
    max_order: usize,
    degree: u32,
    tol: f64,
    accuracy: usize,
) -> Result<Option<OdeFit>, VariabilityError> {
    if max_order == 0 || degree == 0 {
        return Err(VariabilityError::Invalid("max_order and degree must be at least 1".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(VariabilityError::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    if samples.len() < 4 * max_order + 1 {
        return Err(VariabilityError::Invalid(format!(
            "{} samples are too few for order {max_order}; need at least {}",
            samples.len(),
            4 * max_order + 1
        )));
    }
    let d = grid_derivatives(&samples.values, samples.step, max_order, accuracy)?;
    let jets: Vec<Vec<f64>> = (0..d.len()).map(|i| d.jet(i)).collect();
    for order in 1..=max_order {
        let basis = monomial_basis(order + 1, degree);
        if jets.len() < basis.len() {
            return Err(VariabilityError::Invalid(format!(
                "{} usable grid points cannot determine {} monomials",
                jets.len(),
                basis.len()
            )));
        }
        let rows: Vec<Vec<f64>> = jets.iter().map(|j| basis.iter().map(|m| m.eval(&j[..=order])).collect()).collect();
        let fit = NullspaceFit::new(&rows, basis.len());
        let ratio = fit.ratio();
        if ratio >= tol {
            continue;
        }
        let k = fit.null_dimension(tol);
        let null: Vec<Vec<f64>> = fit.vectors[basis.len() - k..].iter().map(|v| fit.descale(v)).collect();
        let penalized: Vec<bool> = basis.iter().map(|m| m.exponents()[order] == 0).collect();
        let coeffs = prune_roundoff(least_penalized(&null, &penalized));
        let poly = MultiPoly::from_coefficients(order + 1, &basis, &coeffs)?;
        let residual_max = jets
            .iter()
            .map(|j| poly.eval_unchecked(&j[..=order]).abs())
            .fold(0.0, f64::max);
        return Ok(Some(OdeFit {
            order,
            poly,
            ratio,
            residual_max,
            null_dimension: k,
        }));
    }
    Ok(None)
}

/// Coefficient of the monomial `T_0^{e_0} ⋯` in `p`, for inspecting fits.
pub fn jet_coeff(p: &MultiPoly, exponents: &[u32]) -> f64 {
    p.coeff(&Monomial::new(exponents.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cosine;

    fn coeffs(p: &MultiPoly, basis: &[Monomial]) -> Vec<f64> {
        basis.iter().map(|m| p.coeff(m)).collect()
    }

    #[test]
    fn exponential_is_first_order() {
        let s = UniformSamples::from_fn(f64::exp, 0.0, 1.0, 201).unwrap();
        let fit = minimal_ode_order(&s, 3, 1, 1e-8, 6).unwrap().unwrap();
        assert_eq!(fit.order, 1);
        let basis = monomial_basis(2, 1);
        // basis: 1, T1, T0
        let c = cosine(&coeffs(&fit.poly, &basis), &[0.0, 1.0, -1.0]);
        assert!(c.abs() > 1.0 - 1e-6, "{c}");
    }

    #[test]
    fn sine_orders() {
        let s = UniformSamples::from_fn(f64::sin, 0.0, 2.0 * std::f64::consts::PI, 401).unwrap();
        let linear = minimal_ode_order(&s, 3, 1, 1e-8, 6).unwrap().unwrap();
        assert_eq!(linear.order, 2);
        let basis = monomial_basis(3, 1);
        let c = cosine(&coeffs(&linear.poly, &basis), &[0.0, 1.0, 0.0, 1.0]);
        assert!(c.abs() > 1.0 - 1e-6, "{c}");
        // y′² + y² − 1 = 0 is already an order-1 relation at degree 2.
        let quad = minimal_ode_order(&s, 3, 2, 1e-8, 6).unwrap().unwrap();
        assert_eq!(quad.order, 1);
        assert!((jet_coeff(&quad.poly, &[2, 0]) - jet_coeff(&quad.poly, &[0, 2])).abs() < 1e-6);
        assert!((jet_coeff(&quad.poly, &[2, 0]) + jet_coeff(&quad.poly, &[0, 0])).abs() < 1e-6);
    }

    #[test]
    fn constant_is_annihilated_by_its_derivative() {
        let s = UniformSamples::from_fn(|_| 0.7, 0.0, 1.0, 101).unwrap();
        let fit = minimal_ode_order(&s, 2, 1, 1e-8, 6).unwrap().unwrap();
        assert_eq!(fit.order, 1);
        assert_eq!(fit.poly.n_terms(), 1);
        assert!((jet_coeff(&fit.poly, &[0, 1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_samples_are_rejected() {
        let mut s = UniformSamples::from_fn(f64::sin, 0.0, 6.0, 301).unwrap();
        for (i, v) in s.values.iter_mut().enumerate() {
            *v += if i % 2 == 0 { 1e-3 } else { -1e-3 };
        }
        assert!(matches!(minimal_ode_order(&s, 2, 1, 1e-8, 6), Err(VariabilityError::Unreliable(_))));
    }
}
