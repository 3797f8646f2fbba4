//! Roots of the characteristic polynomial `p(D) = Dⁿ + c_n Dⁿ⁻¹ + … + c₁`.
//!
//! Coefficients are passed as `[c₁, …, c_n]`, lowest order first, so
//! `[1, 0]` is `D² + 1` and `[-1]` is `D − 1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::VariabilityError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn div(self, o: Complex) -> Complex {
        let d = o.re * o.re + o.im * o.im;
        Complex::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootClass {
    Decaying,
    Growing,
    OscillatoryPure,
    OscillatoryDamped,
    OscillatoryGrowing,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionSpectrum {
    /// `[c₁, …, c_n]`.
    pub coeffs: Vec<f64>,
    /// Sorted by real part, then imaginary part.
    pub roots: Vec<Complex>,
    pub labels: Vec<RootClass>,
    /// `max |p(root)|`.
    pub max_residual: f64,
}

/// `p(z)` and `p′(z)` by Horner's rule.
fn eval_with_derivative(coeffs: &[f64], z: Complex) -> (Complex, Complex) {
    let mut p = Complex::new(1.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp.mul(z).add(p);
        p = p.mul(z).add(Complex::new(c, 0.0));
    }
    (p, dp)
}

pub fn eval_monic(coeffs: &[f64], z: Complex) -> Complex {
    eval_with_derivative(coeffs, z).0
}

/// Parts below this (relative to `1 + |root|`) are treated as zero.
const ZERO_PART: f64 = 1e-12;
/// Near-axis roots within this distance are moved onto the axis when the
/// residual stays small. Covers the `√ε` splitting of repeated roots.
const SNAP: f64 = 1e-6;

fn classify(r: Complex) -> RootClass {
    let scale = 1.0 + r.abs();
    let re_zero = r.re.abs() <= ZERO_PART * scale;
    let im_zero = r.im.abs() <= ZERO_PART * scale;
    match (re_zero, im_zero) {
        (true, true) => RootClass::Polynomial,
        (true, false) => RootClass::OscillatoryPure,
        (false, true) if r.re < 0.0 => RootClass::Decaying,
        (false, true) => RootClass::Growing,
        (false, false) if r.re < 0.0 => RootClass::OscillatoryDamped,
        (false, false) => RootClass::OscillatoryGrowing,
    }
}

pub fn companion_roots(coeffs: &[f64]) -> Result<CompanionSpectrum, VariabilityError> {
    let n = coeffs.len();
    if n == 0 {
        return Err(VariabilityError::Invalid("companion polynomial needs degree >= 1".into()));
    }
    if !coeffs.iter().all(|c| c.is_finite()) {
        return Err(VariabilityError::Invalid("coefficients must be finite".into()));
    }
    // Last column holds −c₁ … −c_n; ones on the subdiagonal.
    let m = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -coeffs[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = m.complex_eigenvalues();
    let mut roots: Vec<Complex> = eig
        .iter()
        .map(|z| {
            let mut r = Complex::new(z.re, z.im);
            for _ in 0..3 {
                let (p, dp) = eval_with_derivative(coeffs, r);
                if dp.abs() == 0.0 {
                    break;
                }
                let next = r.sub(p.div(dp));
                if !(next.re.is_finite() && next.im.is_finite()) || eval_monic(coeffs, next).abs() > p.abs() {
                    break;
                }
                r = next;
            }
            let scale = 1.0 + r.abs();
            if r.im.abs() <= SNAP * scale && eval_monic(coeffs, Complex::new(r.re, 0.0)).abs() <= p_abs_bound(coeffs) {
                r.im = 0.0;
            }
            if r.re.abs() <= SNAP * scale && eval_monic(coeffs, Complex::new(0.0, r.im)).abs() <= p_abs_bound(coeffs) {
                r.re = 0.0;
            }
            r
        })
        .collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let max_residual = roots.iter().map(|&r| eval_monic(coeffs, r).abs()).fold(0.0, f64::max);
    Ok(CompanionSpectrum {
        coeffs: coeffs.to_vec(),
        labels: roots.iter().map(|&r| classify(r)).collect(),
        roots,
        max_residual,
    })
}

/// Residual allowed when snapping a near-axis root onto the axis.
fn p_abs_bound(coeffs: &[f64]) -> f64 {
    1e-10 * (1.0 + coeffs.iter().map(|c| c.abs()).sum::<f64>())
}

/// Coefficients `[c₁, …, c_n]` of `Π (z − r_i)`; imaginary parts are dropped.
pub fn expand_roots(roots: &[Complex]) -> Vec<f64> {
    let mut poly = vec![Complex::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
        for (i, &a) in poly.iter().enumerate() {
            next[i + 1] = next[i + 1].add(a);
            next[i] = next[i].sub(a.mul(r));
        }
        poly = next;
    }
    poly.pop();
    poly.into_iter().map(|c| c.re).collect()
}
