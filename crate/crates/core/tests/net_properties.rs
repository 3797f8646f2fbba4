mod common;

use annlab::net::{build_varied_depth, train, Activation, Model, TrainConfig};
use common::{direct_output, gradient_check, random_net, relative_error, rng};
use rand::Rng;

#[test]
fn backprop_matches_finite_differences() {
    for seed in 0..20 {
        let err = gradient_check(seed);
        assert!(err < 1e-5, "seed {seed}: relative error {err:.3e}");
    }
}

#[test]
fn varied_gradient_includes_mixing_weights() {
    let mut net = build_varied_depth(&[1, 2], 4, Activation::Tanh, 5).unwrap();
    net.combination = vec![0.7, -0.4];
    let batch: Vec<(f64, f64)> = (0..6).map(|i| (-1.0 + 0.4 * i as f64, (i as f64).cos())).collect();
    let (_, grad) = net.gradient(&batch).unwrap();
    let base = net.flatten();
    let loss = |p: &[f64]| {
        let mut n = net.clone();
        n.assign(p);
        batch
            .iter()
            .map(|(x, y)| {
                let f: f64 = n.subnets.iter().zip(&n.combination).map(|(s, c)| c * direct_output(s, *x)).sum();
                (f - y).powi(2)
            })
            .sum::<f64>()
            / batch.len() as f64
    };
    let h = 1e-5;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] += h;
        let up = loss(&p);
        p[i] -= 2.0 * h;
        let down = loss(&p);
        let fd = (up - down) / (2.0 * h);
        assert!(relative_error(grad[i], fd, 1e-6) < 1e-5, "param {i}: {} vs {fd}", grad[i]);
    }
    // The last entries are the mixing weights.
    assert_eq!(grad.len(), base.len());
}

#[test]
fn forward_matches_direct_recursion_and_is_bounded() {
    let mut r = rng(11);
    for draw in 0..1000 {
        let depth = r.random_range(1..=3);
        let widths: Vec<usize> = (0..depth).map(|_| r.random_range(1..=6)).collect();
        let act = if draw % 2 == 0 { Activation::Tanh } else { Activation::Sigmoid };
        let net = random_net(&mut r, &widths, act);
        let x = r.random_range(-50.0..50.0);
        let f = net.forward(x).unwrap().output;
        assert!((f - direct_output(&net, x)).abs() < 1e-14, "draw {draw}");
        let bound = net.alpha.iter().map(|a| a.abs()).sum::<f64>() + net.beta.abs();
        assert!(f.abs() <= bound, "draw {draw}: |{f}| > {bound}");
    }
}

#[test]
fn trained_nets_reach_their_saturation_limits() {
    let data: Vec<(f64, f64)> = (0..40).map(|i| {
        let x = -1.0 + 2.0 * i as f64 / 39.0;
        (x, (3.0 * x).sin())
    }).collect();
    let cfg = TrainConfig {
        max_epochs: 300,
        ..TrainConfig::default()
    };
    for seed in 0..3 {
        let init = annlab::net::NetworkParams::init(&[8, 8], Activation::Sigmoid, seed).unwrap();
        let net = train(init, &data, &cfg).unwrap().model;
        for dir in [1.0, -1.0] {
            let far = net.predict(dir * 1e6);
            let limit = net.limit_at_infinity(dir);
            assert!((far - limit).abs() < 1e-9, "seed {seed} dir {dir}: {far} vs {limit}");
        }
    }
}
