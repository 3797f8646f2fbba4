//! Finite-difference derivatives.
//!
//! Two flavours:
//! - [`derivative`] differentiates a callable with Richardson-extrapolated
//!   central differences. The order-`k` central difference
//!   `h⁻ᵏ Σ_j (−1)^j C(k,j) f(x + (k/2 − j)h)` has an even error expansion,
//!   so two Richardson levels over `h, h/2, h/4` leave an `O(h⁶)` error.
//! - [`grid_derivatives`] differentiates samples on a uniform grid with
//!   centered stencils of accuracy order 2–6 (Fornberg weights) and checks
//!   them against the same stencil at twice the spacing.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("grid has {points} points but order-{order} stencils need at least {needed}")]
    GridTooShort { points: usize, order: usize, needed: usize },
    #[error("accuracy order must be 2, 4 or 6 (got {0})")]
    Accuracy(usize),
    #[error("grid spacing must be positive and finite")]
    Spacing,
    #[error(
        "derivative of order {order} disagrees across stencil widths by {discrepancy:.3e} \
         (relative); samples look noisy or under-resolved"
    )]
    Inconsistent { order: usize, discrepancy: f64 },
}

fn binomial(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

fn central(f: &impl Fn(f64) -> f64, x: f64, k: usize, h: f64) -> f64 {
    let half = k as f64 / 2.0;
    let mut s = 0.0;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * binomial(k, j) * f(x + (half - j as f64) * h);
    }
    s / h.powi(k as i32)
}

/// Step actually used for derivative order `k`: `base_step`, widened to at
/// least `2·ε^{1/(k+6)}` so round-off stays below the `O(h⁶)` truncation.
pub fn richardson_step(k: usize, base_step: f64) -> f64 {
    base_step.max(2.0 * f64::EPSILON.powf(1.0 / (k as f64 + 6.0)))
}

/// k-th derivative of `f` at `x`; `k = 0` returns `f(x)`. The stencil reaches
/// `x ± k·h/2` with `h = richardson_step(k, base_step)`.
pub fn derivative(f: &impl Fn(f64) -> f64, x: f64, k: usize, base_step: f64) -> f64 {
    if k == 0 {
        return f(x);
    }
    let h = richardson_step(k, base_step);
    let d1 = central(f, x, k, h);
    let d2 = central(f, x, k, h / 2.0);
    let d4 = central(f, x, k, h / 4.0);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Half-width of [`derivative`]'s stencil.
pub fn stencil_reach(k: usize, base_step: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * richardson_step(k, base_step) / 2.0
    }
}

/// Weights of the finite-difference approximation to the `order`-th
/// derivative at 0 using nodes `offsets` (Fornberg's recursion).
pub fn fornberg_weights(order: usize, offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Stencil radius (in grid steps) of the centered order-`k`, accuracy-`p` stencil.
pub fn stencil_radius(k: usize, accuracy: usize) -> usize {
    if k == 0 {
        0
    } else {
        k.div_ceil(2) - 1 + accuracy / 2
    }
}

/// Derivatives of uniformly sampled data.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDerivatives {
    /// Index of the first grid point covered.
    pub start: usize,
    /// `table[k][i]` is the k-th derivative at grid index `start + i`.
    pub table: Vec<Vec<f64>>,
    /// Relative discrepancy against the double-spacing stencils, per order.
    pub consistency: Vec<f64>,
}

impl GridDerivatives {
    pub fn len(&self) -> usize {
        self.table.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(f, f′, …, f^(k))` at covered point `i`.
    pub fn jet(&self, i: usize) -> Vec<f64> {
        self.table.iter().map(|col| col[i]).collect()
    }
}

/// Allowed relative disagreement between the `h` and `2h` stencils.
pub const CONSISTENCY_TOL: f64 = 1e-2;

/// Derivatives of orders `0..=max_order` at every grid point where the
/// widest stencil fits. Fails with [`FdError::Inconsistent`] when a
/// derivative computed at spacing `h` and at `2h` differs by more than
/// [`CONSISTENCY_TOL`] relative to `1 + max|f^(k)|`.
pub fn grid_derivatives(values: &[f64], h: f64, max_order: usize, accuracy: usize) -> Result<GridDerivatives, FdError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FdError::Spacing);
    }
    if !matches!(accuracy, 2 | 4 | 6) {
        return Err(FdError::Accuracy(accuracy));
    }
    let radius = (0..=max_order).map(|k| stencil_radius(k, accuracy)).max().unwrap_or(0);
    let wide = 2 * radius;
    let needed = 2 * wide + 1;
    if values.len() < needed {
        return Err(FdError::GridTooShort {
            points: values.len(),
            order: max_order,
            needed,
        });
    }
    let start = radius;
    let end = values.len() - radius;
    let mut table = Vec::with_capacity(max_order + 1);
    let mut consistency = Vec::with_capacity(max_order + 1);
    for k in 0..=max_order {
        if k == 0 {
            table.push(values[start..end].to_vec());
            consistency.push(0.0);
            continue;
        }
        let r = stencil_radius(k, accuracy) as isize;
        let offsets: Vec<f64> = (-r..=r).map(|o| o as f64).collect();
        let w = fornberg_weights(k, &offsets);
        let scale = h.powi(k as i32);
        let apply = |i: usize, stride: isize| -> f64 {
            let s: f64 = (-r..=r)
                .zip(&w)
                .map(|(o, wi)| wi * values[(i as isize + o * stride) as usize])
                .sum();
            s / (scale * (stride as f64).powi(k as i32))
        };
        let col: Vec<f64> = (start..end).map(|i| apply(i, 1)).collect();
        let mut worst: f64 = 0.0;
        let magnitude = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in wide..values.len() - wide {
            let coarse = apply(i, 2);
            worst = worst.max((coarse - col[i - start]).abs());
        }
        let rel = worst / (1.0 + magnitude);
        if rel > CONSISTENCY_TOL {
            return Err(FdError::Inconsistent {
                order: k,
                discrepancy: rel,
            });
        }
        table.push(col);
        consistency.push(rel);
    }
    Ok(GridDerivatives {
        start,
        table,
        consistency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_derivatives_of_sin() {
        let f = |x: f64| x.sin();
        let exact = [
            |x: f64| x.sin(),
            |x: f64| x.cos(),
            |x: f64| -x.sin(),
            |x: f64| -x.cos(),
            |x: f64| x.sin(),
        ];
        let tol = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];
        for (k, e) in exact.iter().enumerate() {
            for &x in &[-1.3, 0.0, 0.4, 2.2] {
                let d = derivative(&f, x, k, 1e-3);
                assert!((d - e(x)).abs() <= tol[k], "k={k} x={x}: {d} vs {}", e(x));
            }
        }
    }

    #[test]
    fn fornberg_reproduces_textbook_stencils() {
        let w = fornberg_weights(1, &[-1.0, 0.0, 1.0]);
        assert_eq!(w, vec![-0.5, 0.0, 0.5]);
        let w = fornberg_weights(2, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let expected = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(stencil_radius(1, 2), 1);
        assert_eq!(stencil_radius(3, 2), 2);
        assert_eq!(stencil_radius(4, 6), 4);
    }

    #[test]
    fn grid_derivatives_of_exp() {
        let h = 0.01;
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let d = grid_derivatives(&ys, h, 3, 6).unwrap();
        for i in 0..d.len() {
            let x = xs[d.start + i];
            for k in 0..=3 {
                assert!((d.table[k][i] - x.exp()).abs() < 1e-7, "k={k}");
            }
        }
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(grid_derivatives(&[1.0; 5], 0.1, 2, 6), Err(FdError::GridTooShort { .. })));
        assert!(matches!(grid_derivatives(&[1.0; 50], 0.1, 2, 3), Err(FdError::Accuracy(3))));
        assert!(matches!(grid_derivatives(&[1.0; 50], 0.0, 2, 2), Err(FdError::Spacing)));
        // Alternating noise has huge high-order derivatives at spacing h that
        // vanish at spacing 2h.
        let noisy: Vec<f64> = (0..200)
            .map(|i| (i as f64 * 0.05).sin() + if i % 2 == 0 { 1e-3 } else { -1e-3 })
            .collect();
        assert!(matches!(grid_derivatives(&noisy, 0.05, 2, 6), Err(FdError::Inconsistent { .. })));
    }
}
