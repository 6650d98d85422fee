mod common;

use common::{full_string, half_filled_block};
use nheth::fock::{enumerate_half_filling, hamming_distance, number_operator, operator_matrix, Bitstring, FermionString};
use nheth::linalg::max_abs_diff;
use proptest::prelude::*;

fn assert_matches_oracle(n: usize, creations: Vec<usize>, annihilations: Vec<usize>) {
    let basis = enumerate_half_filling(n).unwrap();
    let spec = FermionString::new(creations.clone(), annihilations.clone()).unwrap();
    let ours = operator_matrix(&spec, &basis).unwrap();
    let oracle = half_filled_block(n, &full_string(n, &creations, &annihilations));
    for a in 0..basis.dim() {
        for b in 0..basis.dim() {
            assert_eq!(ours[(a, b)].re, oracle[a][b], "N={n} {creations:?} {annihilations:?} ({a},{b})");
            assert_eq!(ours[(a, b)].im, 0.0);
        }
    }
}

#[test]
fn two_body_strings_match_full_space_n6() {
    assert_matches_oracle(6, vec![0, 3], vec![5, 1]);
    assert_matches_oracle(6, vec![4, 2], vec![2, 0]);
    assert_matches_oracle(6, vec![5], vec![0]);
}

#[test]
fn hop_without_crossing() {
    let basis = enumerate_half_filling(2).unwrap();
    let m = operator_matrix(&FermionString::new(vec![1], vec![0]).unwrap(), &basis).unwrap();
    let from = basis.index_of("10".parse::<Bitstring>().unwrap().bits()).unwrap();
    let to = basis.index_of("01".parse::<Bitstring>().unwrap().bits()).unwrap();
    assert_eq!(m[(to, from)].re, 1.0);
    assert_eq!(m[(from, to)].re, 0.0);
}

#[test]
fn hamming_examples() {
    let h = |a: &str, b: &str| hamming_distance(&a.parse().unwrap(), &b.parse().unwrap()).unwrap();
    assert_eq!(h("0011", "0011"), 0);
    assert_eq!(h("0011", "0101"), 2);
    assert_eq!(h("001011", "110001"), 4);
    assert!(hamming_distance(&"01".parse().unwrap(), &"011".parse().unwrap()).is_err());
}

#[test]
fn dimensions() {
    for (n, d) in [(2, 2), (4, 6), (8, 70), (10, 252), (12, 924)] {
        assert_eq!(enumerate_half_filling(n).unwrap().dim(), d);
    }
    for bad in [0, 3, 22] {
        assert!(enumerate_half_filling(bad).is_err());
    }
}

fn string_strategy() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    prop_oneof![Just(4usize), Just(6usize), Just(8usize)].prop_flat_map(|n| {
        (1usize..=2).prop_flat_map(move |k| {
            (
                Just(n),
                proptest::collection::vec(0..n, k),
                proptest::collection::vec(0..n, k),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_matrix_matches_brute_force((n, cr, an) in string_strategy()) {
        assert_matches_oracle(n, cr, an);
    }

    #[test]
    fn adjoint_string_gives_adjoint_matrix((n, cr, an) in string_strategy()) {
        let basis = enumerate_half_filling(n).unwrap();
        let spec = FermionString::new(cr, an).unwrap();
        let m = operator_matrix(&spec, &basis).unwrap();
        let madj = operator_matrix(&spec.adjoint(), &basis).unwrap();
        prop_assert_eq!(max_abs_diff(madj.as_ref(), m.adjoint().to_owned().as_ref()), 0.0);
    }

    #[test]
    fn nonzero_entries_respect_hamming_distance((n, cr, an) in string_strategy()) {
        let basis = enumerate_half_filling(n).unwrap();
        let k = cr.len() as u32;
        let m = operator_matrix(&FermionString::new(cr, an).unwrap(), &basis).unwrap();
        for a in 0..basis.dim() {
            for b in 0..basis.dim() {
                if m[(a, b)].re != 0.0 {
                    prop_assert!(basis.hamming(a, b) <= 2 * k);
                    prop_assert_eq!(basis.hamming(a, b) % 2, 0);
                }
            }
        }
    }

    #[test]
    fn number_operator_properties(n in prop_oneof![Just(2usize), Just(4), Just(6), Just(8), Just(10)], i in 0usize..10) {
        prop_assume!(i < n);
        let basis = enumerate_half_filling(n).unwrap();
        let o = number_operator(i, &basis).unwrap();
        let sq = &o * &o;
        prop_assert_eq!(max_abs_diff(sq.as_ref(), o.as_ref()), 0.0);
        let tr: f64 = (0..basis.dim()).map(|k| o[(k, k)].re).sum();
        prop_assert_eq!(tr * 2.0, basis.dim() as f64);
        let via_string = operator_matrix(&FermionString::new(vec![i], vec![i]).unwrap(), &basis).unwrap();
        prop_assert_eq!(max_abs_diff(via_string.as_ref(), o.as_ref()), 0.0);
    }
}
