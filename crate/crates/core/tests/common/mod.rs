//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use annlab::net::{Activation, Layer, NetworkParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Net with the given hidden widths and entries drawn uniformly from
/// `[-1.5, 1.5]` (weights, readout) and `[-0.5, 0.5]` (biases).
pub fn random_net(rng: &mut impl Rng, widths: &[usize], activation: Activation) -> NetworkParams {
    let mut layers = Vec::new();
    let mut cols = 1;
    for &rows in widths {
        let weights = (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect();
        let biases = (0..rows).map(|_| rng.random_range(-0.5..0.5)).collect();
        layers.push(Layer::new(rows, cols, weights, biases).unwrap());
        cols = rows;
    }
    NetworkParams {
        activation,
        layers,
        alpha: (0..cols).map(|_| rng.random_range(-1.5..1.5)).collect(),
        beta: rng.random_range(-0.5..0.5),
    }
}

/// Direct evaluation of the layer recursion, written without the library's
/// forward pass.
pub fn direct_output(net: &NetworkParams, x: f64) -> f64 {
    let phi = |z: f64| match net.activation {
        Activation::Tanh => z.tanh(),
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
    };
    let mut h = vec![x];
    for layer in &net.layers {
        h = (0..layer.rows)
            .map(|r| {
                let z: f64 = (0..layer.cols).map(|c| layer.weights[r * layer.cols + c] * h[c]).sum::<f64>()
                    + layer.biases[r];
                phi(z)
            })
            .collect();
    }
    net.alpha.iter().zip(&h).map(|(a, v)| a * v).sum::<f64>() + net.beta
}

/// Plain central differences of order 1–3 with step `h`.
pub fn central_derivative(f: impl Fn(f64) -> f64, x: f64, k: usize, h: f64) -> f64 {
    match k {
        0 => f(x),
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        _ => panic!("order {k} not supported"),
    }
}

/// Characteristic polynomial `det(λI − A)` of an integer matrix by
/// Berkowitz's division-free algorithm; coefficients from `λⁿ` down.
pub fn berkowitz(a: &[Vec<i64>]) -> Vec<i128> {
    let n = a.len();
    let at = |i: usize, j: usize| a[i][j] as i128;
    let mut c: Vec<i128> = vec![1, -at(0, 0)];
    for r in 1..n {
        // A_{r+1} = [[A_r, S], [R, a_rr]].
        let s: Vec<i128> = (0..r).map(|i| at(i, r)).collect();
        let row: Vec<i128> = (0..r).map(|j| at(r, j)).collect();
        let mut t = vec![1, -at(r, r)];
        let mut v = s.clone();
        for _ in 0..r {
            t.push(-row.iter().zip(&v).map(|(x, y)| x * y).sum::<i128>());
            v = (0..r).map(|i| (0..r).map(|j| at(i, j) * v[j]).sum()).collect();
        }
        let mut next = vec![0i128; r + 2];
        for (i, slot) in next.iter_mut().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                if i >= j && i - j < t.len() {
                    *slot += t[i - j] * cj;
                }
            }
        }
        c = next;
    }
    c
}

fn sign_changes(coeffs: impl Iterator<Item = i128>) -> usize {
    let mut last = 0i128;
    let mut changes = 0;
    for c in coeffs.filter(|&c| c != 0) {
        if last != 0 && (c > 0) != (last > 0) {
            changes += 1;
        }
        last = c;
    }
    changes
}

/// `(positive, negative, zero)` root counts of a polynomial with only real
/// roots, by Descartes' rule of signs (exact in that case).
pub fn descartes_counts(coeffs_high_first: &[i128]) -> (usize, usize, usize) {
    let n = coeffs_high_first.len() - 1;
    let zero = coeffs_high_first.iter().rev().take_while(|&&c| c == 0).count();
    let pos = sign_changes(coeffs_high_first.iter().copied());
    // p(−λ): flip the sign of odd powers.
    let neg = sign_changes(
        coeffs_high_first
            .iter()
            .enumerate()
            .map(|(i, &c)| if (n - i) % 2 == 1 { -c } else { c }),
    );
    (pos, neg, zero)
}

/// Random symmetric integer matrix with entries in `[-3, 3]`; every third
/// draw is made singular by copying a row and column.
pub fn random_symmetric_int(rng: &mut impl Rng, n: usize, draw: usize) -> Vec<Vec<i64>> {
    let mut a = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-3..=3);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    if draw % 3 == 0 {
        for j in 0..n {
            a[n - 1][j] = a[0][j];
        }
        for i in 0..n {
            a[i][n - 1] = a[i][0];
        }
    }
    a
}

/// Coefficients `[c₁, …, c_n]` of `Π (D − r)` for complex roots, expanded
/// pairwise in complex arithmetic.
pub fn monic_from_roots(roots: &[(f64, f64)]) -> Vec<f64> {
    // p stored low degree first.
    let mut p: Vec<(f64, f64)> = vec![(1.0, 0.0)];
    for &(re, im) in roots {
        let mut next = vec![(0.0, 0.0); p.len() + 1];
        for (k, &(a, b)) in p.iter().enumerate() {
            next[k + 1].0 += a;
            next[k + 1].1 += b;
            next[k].0 -= a * re - b * im;
            next[k].1 -= a * im + b * re;
        }
        p = next;
    }
    p[..p.len() - 1].iter().map(|c| c.0).collect()
}

/// Mean squared error of the directly evaluated network.
pub fn direct_mse(net: &NetworkParams, batch: &[(f64, f64)]) -> f64 {
    batch.iter().map(|(x, y)| (direct_output(net, *x) - y).powi(2)).sum::<f64>() / batch.len() as f64
}

/// Relative error between two derivative values; magnitudes below
/// `floor` are compared absolutely against it.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Largest relative error between the library gradient and central
/// differences (step 1e-5) of the directly evaluated loss, over all
/// parameters of a random net drawn from `seed`.
pub fn gradient_check(seed: u64) -> f64 {
    let mut r = rng(seed);
    let depth = r.random_range(1..=3);
    let widths: Vec<usize> = (0..depth).map(|_| r.random_range(1..=16)).collect();
    let act = if seed % 2 == 0 { Activation::Tanh } else { Activation::Sigmoid };
    let net = random_net(&mut r, &widths, act);
    let batch: Vec<(f64, f64)> = (0..8).map(|_| (r.random_range(-2.0..2.0), r.random_range(-1.0..1.0))).collect();
    let (_, grad) = net.gradient(&batch).unwrap();
    let analytic = grad.flatten();
    let base = net.flatten();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut plus = net.clone();
        let mut p = base.clone();
        p[i] += h;
        plus.assign(&p);
        let mut minus = net.clone();
        p[i] -= 2.0 * h;
        minus.assign(&p);
        let fd = (direct_mse(&plus, &batch) - direct_mse(&minus, &batch)) / (2.0 * h);
        worst = worst.max(relative_error(analytic[i], fd, 1e-6));
    }
    worst
}
