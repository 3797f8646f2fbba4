use crate::poly::MultiPoly;

/// Length of the Elias-gamma code of `n ≥ 1`: `2⌊log₂ n⌋ + 1`.
pub fn elias_gamma_bits(n: u64) -> u64 {
    assert!(n >= 1, "Elias gamma encodes positive integers");
    2 * (63 - n.leading_zeros() as u64) + 1
}

/// Bits to write `P`: a header of `γ(n_vars) + γ(n_terms)`, then per term
/// `γ(e + 1)` for every exponent `e` and a fixed-precision coefficient.
pub fn ode_description_length(p: &MultiPoly, coeff_precision_bits: u64) -> u64 {
    let header = elias_gamma_bits(p.n_vars() as u64) + elias_gamma_bits(p.n_terms().max(1) as u64);
    let body: u64 = p
        .terms()
        .map(|(m, _)| {
            m.exponents()
                .iter()
                .map(|&e| elias_gamma_bits(e as u64 + 1))
                .sum::<u64>()
                + coeff_precision_bits
        })
        .sum();
    header + body
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_lengths() {
        let expected = [(1, 1), (2, 3), (3, 3), (4, 5), (7, 5), (8, 7), (1024, 21)];
        for (n, bits) in expected {
            assert_eq!(elias_gamma_bits(n), bits, "n={n}");
        }
    }

    #[test]
    fn constant_derivative_relation() {
        // y' = 0 as T1 over (T0, T1): header γ(2)+γ(1) = 4, term γ(1)+γ(2)+8 = 12.
        let p = MultiPoly::parse("1 * x1", 2).unwrap();
        assert_eq!(ode_description_length(&p, 8), 16);
    }

    #[test]
    fn sinusoids_of_different_frequency_tie() {
        let slow = MultiPoly::parse("1 * x0 + 1 * x2", 3).unwrap();
        let fast = MultiPoly::parse("4 * x0 + 1 * x2", 3).unwrap();
        assert_eq!(ode_description_length(&slow, 16), ode_description_length(&fast, 16));
    }
}
