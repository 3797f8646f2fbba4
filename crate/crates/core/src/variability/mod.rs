//! Structural variability of polynomial ODEs: minimal order of sampled
//! functions, spectral classes of linear operators, Sylvester inertia of
//! quadratic ones, common annihilators of function families and a
//! description-length score.

mod companion;
mod deficit;
mod description;
mod inertia;
mod order;
mod trajectories;

pub use companion::{companion_roots, expand_roots, Complex, CompanionSpectrum, RootClass};
pub use deficit::{common_annihilator, DeficitReport};
pub use description::{elias_gamma_bits, ode_description_length};
pub use inertia::{inertia_signature, quadratic_matrix, quadratic_ode_class, InertiaReport, InertiaSignature, QuadraticClass};
pub use order::{jet_coeff, minimal_ode_order, OdeFit};
pub use trajectories::{
    class_lattice, integrate_class_trajectories, write_trajectories_csv, QuadraticClassSpec, Trajectory,
    TrajectoryBundle, DEFAULT_GUARD,
};

use thiserror::Error;

use crate::fd::FdError;
use crate::poly::PolyError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariabilityError {
    #[error("unreliable input: {0}")]
    Unreliable(#[from] FdError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("csv: {0}")]
    Io(String),
}

/// Function values on a uniform grid `x_i = start + i·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSamples {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl UniformSamples {
    pub fn from_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self, VariabilityError> {
        if n < 2 || !(hi > lo) {
            return Err(VariabilityError::Invalid(format!("need n >= 2 and hi > lo, got n={n} on [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Ok(UniformSamples {
            start: lo,
            step,
            values: (0..n).map(|i| f(lo + step * i as f64)).collect(),
        })
    }

    /// Accepts `(x, f(x))` pairs whose spacing is uniform to a relative 1e-6.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, VariabilityError> {
        if pairs.len() < 2 {
            return Err(VariabilityError::Invalid("need at least two samples".into()));
        }
        let step = (pairs[pairs.len() - 1].0 - pairs[0].0) / (pairs.len() - 1) as f64;
        if !(step > 0.0 && step.is_finite()) {
            return Err(VariabilityError::Invalid("sample abscissae must increase".into()));
        }
        for (i, w) in pairs.windows(2).enumerate() {
            if ((w[1].0 - w[0].0) - step).abs() > 1e-6 * step {
                return Err(VariabilityError::Invalid(format!(
                    "grid is not uniform between rows {} and {}",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(UniformSamples {
            start: pairs[0].0,
            step,
            values: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
