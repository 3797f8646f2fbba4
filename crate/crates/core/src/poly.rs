//! Sparse multivariate polynomials with `f64` coefficients.
//!
//! Terms live in a `BTreeMap` keyed by [`Monomial`], whose `Ord` is graded
//! lexicographic: total degree first, then exponent vectors compared so that
//! `x0` precedes `x1`. Iteration order, equality and the text form are
//! therefore deterministic.
//!
//! Zero coefficients are pruned exactly (`c == 0.0`). Dropping numerically
//! tiny coefficients is left to callers.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected} variables, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("variable index {index} out of range for {n_vars} variables")]
    VarOutOfRange { index: usize, n_vars: usize },
    #[error("polynomial must have at least one variable")]
    NoVariables,
    #[error("cannot parse polynomial term `{term}`: {reason}")]
    Parse { term: String, reason: String },
}

/// Exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(n_vars: usize) -> Self {
        Monomial(vec![0; n_vars])
    }

    pub fn var(n_vars: usize, index: usize) -> Self {
        let mut e = vec![0; n_vars];
        e[index] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn n_vars(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Product of `point[i]^e_i`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 1.0;
        for (&e, &v) in self.0.iter().zip(point) {
            if e > 0 {
                acc *= v.powi(e as i32);
            }
        }
        acc
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `n_vars` variables of total degree at most `max_degree`,
/// in graded-lex order. The count is `C(n_vars + max_degree, max_degree)`.
pub fn monomial_basis(n_vars: usize, max_degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n_vars];
    for degree in 0..=max_degree {
        fill_degree(&mut current, 0, degree, &mut out);
    }
    out
}

// Emits exponent vectors of exactly `remaining` total degree, largest leading
// exponent first, which matches the `Ord` above.
fn fill_degree(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Monomial>) {
    let n = current.len();
    if n == 0 {
        if remaining == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(Monomial(current.clone()));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_degree(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    n_vars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl MultiPoly {
    pub fn zero(n_vars: usize) -> Self {
        MultiPoly {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(Monomial::one(n_vars), c);
        p
    }

    /// The polynomial `x_index`.
    pub fn var(n_vars: usize, index: usize) -> Result<Self, PolyError> {
        if index >= n_vars {
            return Err(PolyError::VarOutOfRange { index, n_vars });
        }
        let mut p = Self::zero(n_vars);
        p.add_term(Monomial::var(n_vars, index), 1.0);
        Ok(p)
    }

    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        if n_vars == 0 {
            return Err(PolyError::NoVariables);
        }
        let mut p = Self::zero(n_vars);
        for (m, c) in terms {
            if m.n_vars() != n_vars {
                return Err(PolyError::Dimension {
                    expected: n_vars,
                    found: m.n_vars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Coefficient vector on `basis` to polynomial. Length must match.
    pub fn from_coefficients(n_vars: usize, basis: &[Monomial], coeffs: &[f64]) -> Result<Self, PolyError> {
        if basis.len() != coeffs.len() {
            return Err(PolyError::Dimension {
                expected: basis.len(),
                found: coeffs.len(),
            });
        }
        Self::from_terms(n_vars, basis.iter().cloned().zip(coeffs.iter().copied()))
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::total_degree).max()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn check_dims(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.n_vars != other.n_vars {
            return Err(PolyError::Dimension {
                expected: self.n_vars,
                found: other.n_vars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_dims(other)?;
        let mut out = MultiPoly::zero(self.n_vars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> MultiPoly {
        let mut out = MultiPoly::zero(self.n_vars);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * factor);
        }
        out
    }

    /// Formal partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Result<MultiPoly, PolyError> {
        if var >= self.n_vars {
            return Err(PolyError::VarOutOfRange {
                index: var,
                n_vars: self.n_vars,
            });
        }
        let mut out = MultiPoly::zero(self.n_vars);
        for (m, &c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut lowered = m.0.clone();
            lowered[var] -= 1;
            out.add_term(Monomial(lowered), c * e as f64);
        }
        Ok(out)
    }

    /// Sum of terms in canonical order.
    pub fn eval(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.n_vars {
            return Err(PolyError::Dimension {
                expected: self.n_vars,
                found: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(point)).sum()
    }

    /// Parses the text form written by `Display`.
    pub fn parse(text: &str, n_vars: usize) -> Result<MultiPoly, PolyError> {
        if n_vars == 0 {
            return Err(PolyError::NoVariables);
        }
        let text = text.trim();
        let mut p = MultiPoly::zero(n_vars);
        if text == "0" {
            return Ok(p);
        }
        for term in text.split(" + ") {
            let term = term.trim();
            let perr = |reason: &str| PolyError::Parse {
                term: term.to_string(),
                reason: reason.to_string(),
            };
            let (coeff_text, vars_text) = match term.split_once(" * ") {
                Some((c, v)) => (c, Some(v)),
                None => (term, None),
            };
            let coeff: f64 = coeff_text.trim().parse().map_err(|_| perr("bad coefficient"))?;
            let mut exps = vec![0u32; n_vars];
            if let Some(vars_text) = vars_text {
                for factor in vars_text.split_whitespace() {
                    let rest = factor.strip_prefix('x').ok_or_else(|| perr("variable must start with `x`"))?;
                    let (idx, exp) = match rest.split_once('^') {
                        Some((i, e)) => (i, e.parse::<u32>().map_err(|_| perr("bad exponent"))?),
                        None => (rest, 1),
                    };
                    let idx: usize = idx.parse().map_err(|_| perr("bad variable index"))?;
                    if idx >= n_vars {
                        return Err(PolyError::VarOutOfRange { index: idx, n_vars });
                    }
                    exps[idx] += exp;
                }
            }
            p.add_term(Monomial(exps), coeff);
        }
        Ok(p)
    }
}

impl fmt::Display for MultiPoly {
    /// `coeff * x0^a x1^b` terms joined by ` + `, graded-lex order,
    /// 17 significant digits. The zero polynomial prints as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c:.16e}")?;
            if !m.is_constant() {
                write!(f, " *")?;
                for (v, &e) in m.0.iter().enumerate() {
                    match e {
                        0 => {}
                        1 => write!(f, " x{v}")?,
                        _ => write!(f, " x{v}^{e}")?,
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PolyText {
    n_vars: usize,
    terms: String,
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PolyText {
            n_vars: self.n_vars,
            terms: self.to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let t = PolyText::deserialize(deserializer)?;
        MultiPoly::parse(&t.terms, t.n_vars).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i).unwrap()
    }

    fn c(n: usize, v: f64) -> MultiPoly {
        MultiPoly::constant(n, v)
    }

    #[test]
    fn add_cancels_to_constant() {
        let p = x(1, 0).add(&c(1, 1.0)).unwrap();
        let q = x(1, 0).scale(-1.0);
        assert_eq!(p.add(&q).unwrap(), c(1, 1.0));
    }

    #[test]
    fn add_zero_is_identity_and_doubling() {
        let p = x(2, 0).mul(&x(2, 1)).unwrap();
        assert_eq!(p.add(&MultiPoly::zero(2)).unwrap(), p);
        let doubled = p.add(&p).unwrap();
        assert_eq!(doubled.coeff(&Monomial::new(vec![1, 1])), 2.0);
        assert_eq!(doubled.n_terms(), 1);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            x(1, 0).add(&x(2, 1)),
            Err(PolyError::Dimension { expected: 1, found: 2 })
        ));
        assert!(x(1, 0).mul(&x(2, 0)).is_err());
        assert!(x(2, 0).eval(&[1.0]).is_err());
    }

    #[test]
    fn products() {
        let a = x(1, 0).add(&c(1, 1.0)).unwrap();
        let b = x(1, 0).sub(&c(1, 1.0)).unwrap();
        let expected = MultiPoly::parse("-1 + 1 * x0^2", 1).unwrap();
        assert_eq!(a.mul(&b).unwrap(), expected);
        assert_eq!(a.mul(&c(1, 1.0)).unwrap(), a);

        let s = x(2, 0).add(&x(2, 1)).unwrap();
        let sq = s.mul(&s).unwrap();
        assert_eq!(sq.coeff(&Monomial::new(vec![2, 0])), 1.0);
        assert_eq!(sq.coeff(&Monomial::new(vec![1, 1])), 2.0);
        assert_eq!(sq.coeff(&Monomial::new(vec![0, 2])), 1.0);
        assert_eq!(sq.n_terms(), 3);
    }

    #[test]
    fn partial_derivatives() {
        let p = MultiPoly::parse("1 * x0^2 x1", 2).unwrap();
        assert_eq!(p.partial(0).unwrap(), MultiPoly::parse("2 * x0 x1", 2).unwrap());
        assert!(c(2, 5.0).partial(1).unwrap().is_zero());
        let cubic = MultiPoly::parse("-3 * x0 + 1 * x0^3", 1).unwrap();
        assert_eq!(cubic.partial(0).unwrap(), MultiPoly::parse("-3 + 3 * x0^2", 1).unwrap());
        assert!(matches!(p.partial(2), Err(PolyError::VarOutOfRange { index: 2, n_vars: 2 })));
    }

    #[test]
    fn evaluation() {
        let p = MultiPoly::parse("-1 + 1 * x0^2", 1).unwrap();
        assert_eq!(p.eval(&[2.0]).unwrap(), 3.0);
        let q = MultiPoly::parse("7 + 2 * x0 x1^3", 2).unwrap();
        assert_eq!(q.eval(&[0.0, 0.0]).unwrap(), 7.0);
        let s = x(2, 0).add(&x(2, 1)).unwrap();
        let sq = s.mul(&s).unwrap();
        assert_eq!(sq.eval(&[1.0, 2.0]).unwrap(), 9.0);
    }

    #[test]
    fn basis_examples() {
        let b = monomial_basis(1, 2);
        assert_eq!(
            b,
            vec![Monomial::new(vec![0]), Monomial::new(vec![1]), Monomial::new(vec![2])]
        );
        let b = monomial_basis(2, 1);
        assert_eq!(
            b,
            vec![Monomial::new(vec![0, 0]), Monomial::new(vec![1, 0]), Monomial::new(vec![0, 1])]
        );
        assert_eq!(monomial_basis(3, 2).len(), 10);
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
    }

    #[test]
    fn basis_counts_match_binomials_and_order() {
        for n in 1..=6usize {
            for d in 0..=6u32 {
                let b = monomial_basis(n, d);
                assert_eq!(b.len() as u64, binomial((n as u64) + d as u64, d as u64), "n={n} d={d}");
                assert!(b.windows(2).all(|w| w[0] < w[1]), "basis not strictly graded-lex");
            }
        }
    }

    #[test]
    fn text_form() {
        let p = MultiPoly::parse("-1 + 1 * x1 + 1 * x0^2", 2).unwrap();
        assert_eq!(
            p.to_string(),
            "-1.0000000000000000e0 + 1.0000000000000000e0 * x1 + 1.0000000000000000e0 * x0^2"
        );
        assert_eq!(MultiPoly::zero(3).to_string(), "0");
        assert!(MultiPoly::parse("1 * y0", 1).is_err());
        assert!(MultiPoly::parse("1 * x3", 2).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = MultiPoly::parse("0.1 + -2.5e-7 * x0 x2^3", 3).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: MultiPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
