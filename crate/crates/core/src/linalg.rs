//! Column-scaled SVD nullspace fitting, shared by the annihilator search and
//! the variability classifiers.

use nalgebra::DMatrix;

pub const NEGLIGIBLE_COLUMN: f64 = 1e-13;

/// Singular spectrum of a column-normalized design matrix.
#[derive(Debug, Clone)]
pub struct NullspaceFit {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors in the scaled coordinates, matching
    /// `singular_values`.
    pub vectors: Vec<Vec<f64>>,
    /// Euclidean norm of each original column (1 for negligible columns).
    pub column_norms: Vec<f64>,
}

impl NullspaceFit {
    /// Scales every column of `rows` (row-major, each of length `n_cols`)
    /// to unit norm and takes the SVD. Columns whose norm is below
    /// [`NEGLIGIBLE_COLUMN`] times the largest one are zeroed instead, so
    /// round-off in an identically vanishing feature is not amplified.
    /// Requires `rows.len() >= n_cols`.
    pub fn new(rows: &[Vec<f64>], n_cols: usize) -> Self {
        Self::with_floor(rows, n_cols, NEGLIGIBLE_COLUMN)
    }

    /// As [`NullspaceFit::new`] with a chosen relative floor; `0.0` drops
    /// only columns that are exactly zero.
    pub fn with_floor(rows: &[Vec<f64>], n_cols: usize, floor: f64) -> Self {
        assert!(rows.len() >= n_cols, "nullspace fit needs at least as many rows as columns");
        let mut column_norms = vec![0.0; n_cols];
        for row in rows {
            for (n, v) in column_norms.iter_mut().zip(row) {
                *n += v * v;
            }
        }
        let top = column_norms.iter().fold(0.0f64, |m, v| m.max(v.sqrt()));
        let mut keep = vec![true; n_cols];
        for (n, k) in column_norms.iter_mut().zip(&mut keep) {
            let norm = n.sqrt();
            *k = norm > floor * top && norm > 0.0;
            *n = if *k { norm } else { 1.0 };
        }
        let a = DMatrix::from_fn(rows.len(), n_cols, |i, j| if keep[j] { rows[i][j] / column_norms[j] } else { 0.0 });
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut pairs: Vec<(f64, Vec<f64>)> = svd
            .singular_values
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, v_t.row(i).iter().copied().collect()))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (singular_values, vectors) = pairs.into_iter().unzip();
        NullspaceFit {
            singular_values,
            vectors,
            column_norms,
        }
    }

    pub fn largest(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// `σ_min / σ_max` (0 when the matrix is zero).
    pub fn ratio(&self) -> f64 {
        let top = self.largest();
        if top > 0.0 {
            self.smallest() / top
        } else {
            0.0
        }
    }

    /// Number of trailing singular values with `σ / σ_max < tol`.
    pub fn null_dimension(&self, tol: f64) -> usize {
        let top = self.largest();
        self.singular_values.iter().filter(|&&s| top <= 0.0 || s / top < tol).count()
    }

    /// Maps a scaled-coordinate vector back to original coefficients,
    /// normalized to unit Euclidean norm with its largest-magnitude entry
    /// positive.
    pub fn descale(&self, scaled: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = scaled.iter().zip(&self.column_norms).map(|(v, n)| v / n).collect();
        unit_with_sign(raw)
    }

    /// The last `k` singular values, ascending.
    pub fn tail(&self, k: usize) -> Vec<f64> {
        self.singular_values.iter().rev().take(k).copied().collect()
    }
}

/// Coefficients of a unit-norm relation at or below this are round-off.
pub const ROUNDOFF_COEFF: f64 = 1e-12;

/// Zeroes round-off entries of a unit vector and renormalizes it.
pub fn prune_roundoff(v: Vec<f64>) -> Vec<f64> {
    unit_with_sign(v.into_iter().map(|c| if c.abs() <= ROUNDOFF_COEFF { 0.0 } else { c }).collect())
}

/// Normalizes to unit norm and flips the sign so the largest-magnitude
/// entry (first one on ties) is positive.
pub fn unit_with_sign(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v;
    }
    let mut lead = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[lead].abs() {
            lead = i;
        }
    }
    let s = if v[lead] < 0.0 { -1.0 / norm } else { 1.0 / norm };
    for x in &mut v {
        *x *= s;
    }
    v
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_exact_dependency() {
        // Columns (1, t, 2t + 3): nullspace spanned by (3, 2, -1).
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let t = i as f64 * 0.37 - 1.0;
                vec![1.0, t, 2.0 * t + 3.0]
            })
            .collect();
        let fit = NullspaceFit::new(&rows, 3);
        assert!(fit.ratio() < 1e-14);
        assert_eq!(fit.null_dimension(1e-10), 1);
        let v = fit.descale(fit.vectors.last().unwrap());
        let expected = unit_with_sign(vec![3.0, 2.0, -1.0]);
        assert!(cosine(&v, &expected).abs() > 1.0 - 1e-12);
        assert!(fit.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn zero_column_is_a_null_direction() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, 0.0]).collect();
        let fit = NullspaceFit::new(&rows, 3);
        assert_eq!(fit.smallest(), 0.0);
        let v = fit.descale(fit.vectors.last().unwrap());
        assert!(v[2] > 1.0 - 1e-12);
    }
}
