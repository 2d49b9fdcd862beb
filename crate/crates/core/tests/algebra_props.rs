use proptest::prelude::*;
use stochclifford::algebra::{blade_product, BladeIndex, Multivector, ParaVector};
use stochclifford::clifford_inner_product;

/// Sign of `e_A e_B` by literally concatenating the generator words and
/// bubble-sorting, contracting adjacent equal generators to `-1`.
fn oracle(a: u32, b: u32) -> (i8, u32) {
    let mut word: Vec<u32> = (0..32).filter(|k| a >> k & 1 == 1).collect();
    word.extend((0..32).filter(|k| b >> k & 1 == 1));
    let mut sign = 1i8;
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < word.len() {
            if word[i] > word[i + 1] {
                word.swap(i, i + 1);
                sign = -sign;
                changed = true;
            } else if word[i] == word[i + 1] {
                word.drain(i..i + 2);
                sign = -sign;
                changed = true;
                continue;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    (sign, word.iter().fold(0, |acc, k| acc | 1 << k))
}

#[test]
fn sign_matches_bubble_sort_oracle_up_to_dim_8() {
    for dim in 1..=8usize {
        for a in 0..1u32 << dim {
            for b in 0..1u32 << dim {
                let (s, c) = blade_product(BladeIndex::new(a, dim).unwrap(), BladeIndex::new(b, dim).unwrap(), dim).unwrap();
                assert_eq!((s, c.bits()), oracle(a, b), "dim {dim}, a {a:b}, b {b:b}");
            }
        }
    }
}

#[test]
fn generators_anticommute_exactly() {
    for dim in 1..=8 {
        for j in 1..=dim {
            for k in 1..=dim {
                let ej = Multivector::basis(dim, j).unwrap();
                let ek = Multivector::basis(dim, k).unwrap();
                let s = &(&ej * &ek) + &(&ek * &ej);
                let expect = Multivector::scalar(dim, if j == k { -2.0 } else { 0.0 });
                assert_eq!(s, expect);
            }
        }
    }
}

fn mv(dim: usize) -> impl Strategy<Value = Multivector> {
    prop::collection::vec(-2.0f64..2.0, 1 << dim).prop_map(move |c| Multivector::from_coeffs(dim, c).unwrap())
}

fn triple() -> impl Strategy<Value = (Multivector, Multivector, Multivector)> {
    (1usize..=5).prop_flat_map(|d| (mv(d), mv(d), mv(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn product_is_associative((a, b, c) in triple()) {
        let l = &(&a * &b) * &c;
        let r = &a * &(&b * &c);
        prop_assert!((&l - &r).norm() <= 1e-12 * (1.0 + l.norm()));
    }

    #[test]
    fn conjugation_reverses_products((a, b, _c) in triple()) {
        let l = (&a * &b).conjugate();
        let r = &b.conjugate() * &a.conjugate();
        prop_assert!((&l - &r).norm() <= 1e-12 * (1.0 + l.norm()));
    }

    #[test]
    fn conjugation_is_an_involution((a, _b, _c) in triple()) {
        prop_assert_eq!(a.conjugate().conjugate(), a);
    }

    #[test]
    fn distributive((a, b, c) in triple()) {
        let l = &a * &(&b + &c);
        let r = &(&a * &b) + &(&a * &c);
        prop_assert!((&l - &r).norm() <= 1e-12 * (1.0 + l.norm()));
    }

    #[test]
    fn paravector_norm_is_multiplicative(x in prop::collection::vec(-3.0f64..3.0, 4), y in prop::collection::vec(-3.0f64..3.0, 4)) {
        let (px, py) = (ParaVector::new(x).unwrap(), ParaVector::new(y).unwrap());
        let prod = &px.to_multivector() * &py.to_multivector();
        prop_assert!((prod.norm() - px.norm() * py.norm()).abs() <= 1e-12 * (1.0 + prod.norm()));
        // x conj(x) = |x|^2 for para-vectors
        let xx = &px.to_multivector() * &px.to_multivector().conjugate();
        prop_assert!((&xx - &Multivector::scalar(3, px.norm_sq())).norm() <= 1e-12 * (1.0 + xx.norm()));
    }

    #[test]
    fn inner_product_scalar_part_is_coefficient_dot((a, b, _c) in triple()) {
        let ip = clifford_inner_product(std::slice::from_ref(&a), std::slice::from_ref(&b), &[1.0]).unwrap();
        let dot: f64 = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum();
        prop_assert!((ip.sc() - dot).abs() <= 1e-12 * (1.0 + dot.abs()));
    }
}
