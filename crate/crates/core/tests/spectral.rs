mod common;

use common::{c, determinant, ginibre, gue};
use nheth::dynamics::real_spectrum_fixture;
use nheth::spectral::{decompose, decompose_with, overlap_gram, reconstruction_error, trace_defect, SpectralOptions};
use nheth::{c64, Error, Mat};
use proptest::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

#[test]
fn diagonal_input() {
    let h = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => c(3.0, 0.0),
        (1, 1) => c(1.0, 2.0),
        _ => c(0.0, 0.0),
    });
    let dec = decompose(h.as_ref()).unwrap();
    assert_eq!(dec.eigenvalues(), &[c(1.0, 2.0), c(3.0, 0.0)]);
    assert_eq!(dec.right()[(1, 0)], c(1.0, 0.0));
    assert_eq!(dec.right()[(0, 1)], c(1.0, 0.0));
    assert_eq!(dec.left()[(0, 1)], c(1.0, 0.0));
}

#[test]
fn analytic_two_by_two() {
    let h = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) | (0, 1) => c(1.0, 0.0),
        (1, 1) => c(2.0, 0.0),
        _ => c(0.0, 0.0),
    });
    let dec = decompose(h.as_ref()).unwrap();
    let (r, l) = (dec.right(), dec.left());
    assert!((dec.eigenvalues()[0] - c(1.0, 0.0)).norm() < 1e-14);
    assert!((dec.eigenvalues()[1] - c(2.0, 0.0)).norm() < 1e-14);
    assert!((r[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14 && r[(1, 0)].norm() < 1e-14);
    assert!((r[(0, 1)] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
    assert!((r[(1, 1)] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
    // <L_1| = (1, -1), <L_2| = (0, sqrt 2)
    assert!((l[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14 && (l[(0, 1)] + c(1.0, 0.0)).norm() < 1e-14);
    assert!(l[(1, 0)].norm() < 1e-14 && (l[(1, 1)] - c(2f64.sqrt(), 0.0)).norm() < 1e-14);
    let g = overlap_gram(&dec);
    assert!((g.get(0, 1) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
}

#[test]
fn hermitian_limit() {
    let h = gue(16, 9);
    let dec = decompose(h.as_ref()).unwrap();
    assert!(overlap_gram(&dec).max_offdiag() < 1e-10);
    for m in 0..16 {
        for i in 0..16 {
            assert!((dec.left()[(m, i)] - dec.right()[(i, m)].conj()).norm() < 1e-10);
        }
    }
}

#[test]
fn exceptional_point_is_reported() {
    let h = Mat::from_fn(3, 3, |i, j| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    match decompose(h.as_ref()) {
        Err(Error::ExceptionalPoint { condition, .. }) => assert!(condition > 1e6),
        other => panic!("{other:?}"),
    }
}

#[test]
fn rejects_bad_input() {
    let h = Mat::<c64>::zeros(2, 3);
    assert!(matches!(decompose(h.as_ref()), Err(Error::InvalidArgument(_))));
    let mut h = Mat::<c64>::zeros(2, 2);
    h[(0, 0)] = c(f64::NAN, 0.0);
    assert!(decompose(h.as_ref()).is_err());
}

#[test]
fn determinant_is_product_of_eigenvalues() {
    for (d, seed) in [(6, 1), (20, 2), (70, 3)] {
        let h = ginibre(d, seed);
        let dec = decompose(h.as_ref()).unwrap();
        let prod = dec.eigenvalues().iter().fold(c(1.0, 0.0), |acc, &z| acc * z);
        let det = determinant(h.as_ref());
        assert!((prod - det).norm() < 1e-9 * det.norm().max(1e-300), "D={d}");
    }
}

#[test]
fn real_spectrum_fixture_stays_real() {
    let fx = real_spectrum_fixture(30, 5).unwrap();
    let dec = decompose(fx.matrix.as_ref()).unwrap();
    let norm = fx.matrix.norm_l2();
    assert!(dec.eigenvalues().iter().all(|z| z.im.abs() < 1e-9 * norm));
}

#[test]
fn tight_thresholds_reject() {
    let h = ginibre(40, 4);
    let strict = SpectralOptions {
        pairing_threshold: 1e-30,
        ..SpectralOptions::default()
    };
    assert!(matches!(decompose_with(h.as_ref(), &strict), Err(Error::ExceptionalPoint { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decomposition_invariants(d in 2usize..48, seed in any::<u64>()) {
        let h = ginibre(d, seed);
        let dec = decompose(h.as_ref()).unwrap();
        let norm = h.norm_l2();
        prop_assert!(reconstruction_error(&dec, h.as_ref()) < 1e-8);
        prop_assert!(dec.pairing_error() < 1e-8);
        prop_assert!(trace_defect(&dec, h.as_ref()) < 1e-9 * norm);
        prop_assert!(dec.residual() < 1e-10 * norm.max(1.0));
        for m in 0..d {
            prop_assert!((dec.right().col(m).norm_l2() - 1.0).abs() < 1e-12);
        }
        let eps = dec.eigenvalues();
        for w in eps.windows(2) {
            prop_assert!((w[0].re, w[0].im) <= (w[1].re, w[1].im));
        }
        let lr = dec.left() * dec.right();
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                prop_assert!((lr[(i, j)] - target).norm() < 1e-8);
            }
        }
        let g = overlap_gram(&dec);
        for i in 0..d {
            prop_assert!((g.get(i, i) - c(1.0, 0.0)).norm() < 1e-12);
            for j in 0..d {
                prop_assert!((g.get(i, j) - g.get(j, i).conj()).norm() < 1e-14);
            }
        }
        let min_eig = nheth::dynamics::hermitian_eigenvalues(g.matrix()).unwrap()[0];
        prop_assert!(min_eig > -1e-12);
    }

    #[test]
    fn gauge_changes_leave_overlap_moduli(d in 2usize..24, seed in any::<u64>(), angle in 0.0f64..6.2) {
        let h = ginibre(d, seed);
        let dec = decompose(h.as_ref()).unwrap();
        let phases: Vec<c64> = (0..d).map(|m| c64::from_polar(1.0, angle * (m as f64 + 1.0))).collect();
        let re = dec.rephased(&phases).unwrap();
        let (g1, g2) = (overlap_gram(&dec), overlap_gram(&re));
        for i in 0..d {
            for j in 0..d {
                prop_assert!((g1.get(i, j).norm() - g2.get(i, j).norm()).abs() < 1e-12);
            }
        }
        prop_assert!(reconstruction_error(&re, h.as_ref()) < 1e-8);
    }
}
