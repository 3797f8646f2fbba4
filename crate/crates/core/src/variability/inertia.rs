use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{companion_roots, CompanionSpectrum, VariabilityError};
use crate::poly::{Monomial, MultiPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InertiaSignature {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertiaReport {
    pub signature: InertiaSignature,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub epsilon: f64,
    pub symmetrized: bool,
}

/// Sylvester inertia by eigenvalue sign counting with threshold
/// `1e-10·(1 + ‖A‖₂)`. Non-symmetric input is replaced by `(A + Aᵀ)/2`.
pub fn inertia_signature(a: &DMatrix<f64>) -> Result<InertiaReport, VariabilityError> {
    if a.nrows() != a.ncols() {
        return Err(VariabilityError::Invalid(format!(
            "inertia needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(VariabilityError::Invalid("matrix has non-finite entries".into()));
    }
    let asym = (a - a.transpose()).norm();
    let symmetrized = asym >= 1e-12 * a.norm() && asym > 0.0;
    if symmetrized {
        log::warn!("matrix is not symmetric (‖A − Aᵀ‖ = {asym:.3e}); using its symmetric part");
    }
    let sym = (a + a.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| y.total_cmp(x));
    let spectral = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let epsilon = 1e-10 * (1.0 + spectral);
    let n_plus = eigenvalues.iter().filter(|&&v| v > epsilon).count();
    let n_minus = eigenvalues.iter().filter(|&&v| v < -epsilon).count();
    Ok(InertiaReport {
        signature: InertiaSignature {
            n_plus,
            n_minus,
            n_zero: eigenvalues.len() - n_plus - n_minus,
        },
        eigenvalues,
        epsilon,
        symmetrized,
    })
}

/// Symmetric matrix `S` with `xᵀSx` equal to the degree-2 part of `q`.
pub fn quadratic_matrix(q: &MultiPoly) -> DMatrix<f64> {
    let n = q.n_vars();
    let mut s = DMatrix::zeros(n, n);
    for (m, c) in q.terms() {
        if m.total_degree() != 2 {
            continue;
        }
        let vars: Vec<usize> = m
            .exponents()
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
            .collect();
        let (i, j) = (vars[0], vars[1]);
        if i == j {
            s[(i, i)] += c;
        } else {
            s[(i, j)] += 0.5 * c;
            s[(j, i)] += 0.5 * c;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticClass {
    pub inertia: InertiaReport,
    /// Signs of the diagonalized quadratic part, `+1`s then `−1`s then `0`s.
    pub pattern: Vec<i8>,
    /// For a linear `q`, the characteristic polynomial of `q = 0` solved for
    /// its highest derivative.
    pub linear: Option<CompanionSpectrum>,
}

/// Sylvester class of a polynomial ODE `q(T₀, …, T_n) = 0` of degree ≤ 2.
pub fn quadratic_ode_class(q: &MultiPoly) -> Result<QuadraticClass, VariabilityError> {
    if q.total_degree().unwrap_or(0) > 2 {
        return Err(VariabilityError::Invalid(format!(
            "quadratic classification needs degree <= 2, got {}",
            q.total_degree().unwrap_or(0)
        )));
    }
    let inertia = inertia_signature(&quadratic_matrix(q))?;
    let sig = inertia.signature;
    let mut pattern = vec![1i8; sig.n_plus];
    pattern.extend(std::iter::repeat_n(-1i8, sig.n_minus));
    pattern.extend(std::iter::repeat_n(0i8, sig.n_zero));
    let linear = if sig.n_plus + sig.n_minus == 0 {
        linear_spectrum(q)?
    } else {
        None
    };
    Ok(QuadraticClass {
        inertia,
        pattern,
        linear,
    })
}

/// `Σ a_k T_k + a₀ = 0` with top derivative `T_n` gives the homogeneous
/// operator `Dⁿ + Σ_{k<n} (a_k / a_n) Dᵏ`.
fn linear_spectrum(q: &MultiPoly) -> Result<Option<CompanionSpectrum>, VariabilityError> {
    let n = q.n_vars();
    let a: Vec<f64> = (0..n).map(|k| q.coeff(&Monomial::var(n, k))).collect();
    let Some(top) = a.iter().rposition(|&v| v != 0.0) else {
        return Ok(None);
    };
    if top == 0 {
        return Ok(None);
    }
    let coeffs: Vec<f64> = a[..top].iter().map(|v| v / a[top]).collect();
    Ok(Some(companion_roots(&coeffs)?))
}
