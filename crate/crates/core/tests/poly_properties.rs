use annlab::poly::{monomial_basis, Monomial, MultiPoly};
use proptest::prelude::*;

const N_VARS: usize = 3;

fn poly_strategy() -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((prop::collection::vec(0u32..4, N_VARS), -5.0f64..5.0), 0..=20)
        .prop_map(|terms| MultiPoly::from_terms(N_VARS, terms.into_iter().map(|(e, c)| (Monomial::new(e), c))).unwrap())
}

fn integer_poly_strategy() -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((prop::collection::vec(0u32..4, N_VARS), -20i32..=20), 0..=20).prop_map(|terms| {
        MultiPoly::from_terms(N_VARS, terms.into_iter().map(|(e, c)| (Monomial::new(e), c as f64))).unwrap()
    })
}

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.5f64..1.5, N_VARS), 100)
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
}

proptest! {
    #[test]
    fn product_evaluates_to_product_of_values(p in poly_strategy(), q in poly_strategy(), pts in points()) {
        let pq = p.mul(&q).unwrap();
        for v in &pts {
            let expected = p.eval(v).unwrap() * q.eval(v).unwrap();
            let got = pq.eval(v).unwrap();
            // Relative to the size of the summands, since values may cancel.
            let scale: f64 = p.terms().map(|(m, c)| (c * m.eval(v)).abs()).sum::<f64>()
                * q.terms().map(|(m, c)| (c * m.eval(v)).abs()).sum::<f64>();
            prop_assert!((got - expected).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE), "{got} vs {expected}");
        }
    }

    // Integer coefficients keep every operation exact, so equality is bitwise.
    #[test]
    fn partial_derivative_is_additive(p in integer_poly_strategy(), q in integer_poly_strategy(), var in 0..N_VARS) {
        let lhs = p.add(&q).unwrap().partial(var).unwrap();
        let rhs = p.partial(var).unwrap().add(&q.partial(var).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn serialization_is_identity_on_canonical_form(p in poly_strategy()) {
        let json = serde_json::to_string(&p).unwrap();
        let back: MultiPoly = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn no_zero_coefficients_are_stored(p in poly_strategy(), q in poly_strategy()) {
        for r in [p.add(&q).unwrap(), p.sub(&p).unwrap(), p.mul(&q).unwrap()] {
            prop_assert!(r.terms().all(|(_, c)| c != 0.0));
        }
        prop_assert!(p.sub(&p).unwrap().is_zero());
    }
}

#[test]
fn basis_sizes_match_binomials() {
    for n in 1..=6usize {
        for d in 0..=6u32 {
            let basis = monomial_basis(n, d);
            assert_eq!(basis.len() as u64, binomial((n as u64) + d as u64, d as u64), "n={n} d={d}");
            assert!(basis.windows(2).all(|w| w[0] < w[1]), "not strictly graded-lex for n={n} d={d}");
            assert!(basis.iter().all(|m| m.total_degree() <= d));
        }
    }
}
