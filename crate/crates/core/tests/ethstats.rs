mod common;

use common::{c, ginibre};
use nheth::ensembles::{sample, EnsembleSpec, Model};
use nheth::ethstats::{
    corrected_elements, decomposition_check, matrix_elements, pool_statistics, select_window, window_samples,
    BasisKind, DiagReference, EnergyWindow, OffdiagMoments, WindowSamples,
};
use nheth::fock::number_operator;
use nheth::linalg::{hermiticity_defect, identity};
use nheth::spectral::{decompose, overlap_gram};
use nheth::{c64, Mat};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn hermitian_limit_matches_direct_diagonalization() {
    let r = sample(&EnsembleSpec::new(Model::GinibreHermitianBaseline, 8, 12, 0)).unwrap();
    let o = number_operator(0, &r.basis).unwrap();
    let dec = decompose(r.matrix.as_ref()).unwrap();
    let rr = matrix_elements(o.as_ref(), &dec, BasisKind::RightRight).unwrap();
    let evd = r.matrix.self_adjoint_eigen(faer::Side::Lower).unwrap();
    let u = evd.U();
    let direct = u.adjoint() * &o * u;
    for m in 0..70 {
        for n in 0..70 {
            assert!((rr.elements[(m, n)].norm() - direct[(m, n)].norm()).abs() < 1e-9);
        }
        assert!((rr.elements[(m, m)] - direct[(m, m)]).norm() < 1e-9);
    }
    let t = corrected_elements(&rr).unwrap();
    for m in 0..70 {
        for n in 0..70 {
            assert!((t.tilde[(m, n)] - rr.elements[(m, n)]).norm() < 1e-10);
        }
    }
}

#[test]
fn identity_observable_degenerate_case() {
    let h = ginibre(30, 3);
    let dec = decompose(h.as_ref()).unwrap();
    let id = identity(30);
    let rr = matrix_elements(id.as_ref(), &dec, BasisKind::RightRight).unwrap();
    assert_eq!(rr.observable_mean, 1.0);
    let t = corrected_elements(&rr).unwrap();
    for m in 0..30 {
        for n in 0..30 {
            if m != n {
                assert_eq!(t.tilde[(m, n)], c(0.0, 0.0));
            }
        }
    }
    let rl = matrix_elements(id.as_ref(), &dec, BasisKind::RightLeft).unwrap();
    for m in 0..30 {
        for n in 0..30 {
            let target = if m == n { c(1.0, 0.0) } else { c(0.0, 0.0) };
            assert!((rl.elements[(m, n)] - target).norm() < 1e-8);
        }
    }
}

#[test]
fn right_left_basis_rejects_correction() {
    let h = ginibre(6, 1);
    let dec = decompose(h.as_ref()).unwrap();
    let rl = matrix_elements(identity(6).as_ref(), &dec, BasisKind::RightLeft).unwrap();
    assert!(matches!(corrected_elements(&rl), Err(nheth::Error::UnsupportedBasis(_))));
}

#[test]
fn correction_reduces_ginibre_offdiagonal_rms() {
    for k in 0..5 {
        let r = sample(&EnsembleSpec::new(Model::GinibreComplex, 8, 40, k)).unwrap();
        let dec = decompose(r.matrix.as_ref()).unwrap();
        let o = number_operator(1, &r.basis).unwrap();
        let rr = matrix_elements(o.as_ref(), &dec, BasisKind::RightRight).unwrap();
        let t = corrected_elements(&rr).unwrap();
        let all: Vec<usize> = (0..70).collect();
        let bare = OffdiagMoments::of(rr.elements.as_ref(), &all).rms();
        let corr = OffdiagMoments::of(t.tilde.as_ref(), &all).rms();
        assert!(corr < bare, "realization {k}: {corr} vs {bare}");
        assert!(hermiticity_defect(rr.elements.as_ref()) < 1e-10);
        assert!(hermiticity_defect(t.tilde.as_ref()) < 1e-10);
        assert!((rr.observable_mean - 0.5).abs() < 1e-15);
        assert!((rr.fluctuation_scale() - (0.5f64 / 70.0).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn disk_window_is_populated_for_ginibre() {
    let w = EnergyWindow::disk(0.2).unwrap();
    let nonempty = (0..20)
        .filter(|&k| {
            let r = sample(&EnsembleSpec::new(Model::GinibreComplex, 8, 41, k)).unwrap();
            !select_window(decompose(r.matrix.as_ref()).unwrap().eigenvalues(), &w).is_empty()
        })
        .count();
    assert!(nonempty >= 15, "{nonempty}");
}

#[test]
fn pooled_ginibre_statistics() {
    let w = EnergyWindow::disk(0.3).unwrap();
    let samples: Vec<WindowSamples> = (0..40)
        .map(|k| {
            let r = sample(&EnsembleSpec::new(Model::GinibreComplex, 8, 42, k)).unwrap();
            let dec = decompose(r.matrix.as_ref()).unwrap();
            let o = number_operator(0, &r.basis).unwrap();
            let rr = matrix_elements(o.as_ref(), &dec, BasisKind::RightRight).unwrap();
            let t = corrected_elements(&rr).unwrap();
            window_samples(&rr, &t, dec.eigenvalues(), &w)
        })
        .collect();
    let g = pool_statistics(&samples, &w, DiagReference::GlobalMean).unwrap();
    let wm = pool_statistics(&samples, &w, DiagReference::WindowMean).unwrap();
    assert_eq!(g.observable_mean, 0.5);
    assert!((g.diag_mean - 0.5).abs() < 0.05);
    let e = c(g.window_mean_energy[0], g.window_mean_energy[1]);
    assert!(w.contains(e));
    assert_eq!(g.reference_value, 0.5);
    // window mean taken within each realization
    let groups: Vec<&Vec<f64>> = samples.iter().map(|s| &s.diag).filter(|d| d.len() >= 2).collect();
    let mut ss = 0.0;
    let mut n = 0;
    for d in &groups {
        let m = d.iter().sum::<f64>() / d.len() as f64;
        ss += d.iter().map(|x| (x - m).powi(2)).sum::<f64>();
        n += d.len();
    }
    assert_eq!(wm.diag_samples.len(), n);
    assert!((wm.var_diag - ss / (n - groups.len()) as f64).abs() < 1e-14);
    assert!(wm.diag_samples.iter().sum::<f64>().abs() < 1e-12);
    assert!(wm.var_diag < g.var_diag * 1.5);
    assert_eq!(g.window_counts.iter().sum::<usize>(), g.diag_samples.len());
    let pairs: usize = g.window_counts.iter().map(|&k| k * k.saturating_sub(1) / 2).sum();
    assert_eq!(pairs, g.offdiag_samples.len());
    assert_eq!(g.var_diag, nheth::stats::sample_variance(&g.diag_samples));
    assert_eq!(g.var_offdiag, nheth::stats::sample_variance(&g.offdiag_samples));
}

#[test]
fn synthetic_gaussian_pool_is_recovered() {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let dlaw = Normal::new(0.5, 0.1).unwrap();
    let olaw = Normal::new(0.0, 0.07).unwrap();
    let samples: Vec<WindowSamples> = (0..50)
        .map(|_| WindowSamples {
            energies: vec![[0.0, 0.0]; 40],
            diag: (0..40).map(|_| dlaw.sample(&mut rng)).collect(),
            offdiag: (0..780).map(|_| [olaw.sample(&mut rng), olaw.sample(&mut rng)]).collect(),
            observable_mean: 0.5,
            bare: OffdiagMoments::default(),
            corrected: OffdiagMoments::default(),
        })
        .collect();
    let w = EnergyWindow::disk(1.0).unwrap();
    let s = pool_statistics(&samples, &w, DiagReference::GlobalMean).unwrap();
    assert!(s.diag_fit.mean.abs() < 3.0 * s.diag_fit.mean_stderr);
    assert!((s.diag_fit.variance - 0.01).abs() < 3.0 * s.diag_fit.variance_stderr);
    assert!(s.offdiag_fit.mean.abs() < 3.0 * s.offdiag_fit.mean_stderr);
    assert!((s.offdiag_fit.variance - 0.0049).abs() < 3.0 * s.offdiag_fit.variance_stderr);
    assert!(s.diag_fit.p_value > 0.01 && s.offdiag_fit.p_value > 0.01);
    assert!((s.var_offdiag_imag - 0.0049).abs() < 3.0 * s.offdiag_fit.variance_stderr);
}

#[test]
fn window_strings() {
    let w: EnergyWindow = "slice:0,1,0.05".parse().unwrap();
    assert!(w.contains(c(0.9, 0.01)));
    assert!(!w.contains(c(-0.9, 0.0)));
    assert!(!w.contains(c(0.5, 0.1)));
}

fn diag_obs(d: usize, seed: u64) -> Mat<c64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let law = Normal::new(0.0, 1.0).unwrap();
    Mat::from_fn(d, d, |i, j| if i == j { c(law.sample(&mut rng), 0.0) } else { c(0.0, 0.0) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decomposition_identity(d in 3usize..20, seed in any::<u64>()) {
        let h = ginibre(d, seed);
        let dec = decompose(h.as_ref()).unwrap();
        let o = diag_obs(d, seed ^ 1);
        let rr = matrix_elements(o.as_ref(), &dec, BasisKind::RightRight).unwrap();
        for m in 0..d {
            for n in 0..d {
                if m == n {
                    continue;
                }
                let chk = decomposition_check(&dec, m, n).unwrap();
                prop_assert!(chk.residual < 1e-12);
                prop_assert!((chk.alpha.norm_sqr() + chk.beta.norm_sqr() - 1.0).abs() < 1e-12);
                let rebuilt = chk.rebuild_element(o.as_ref(), &dec, m);
                prop_assert!((rebuilt - rr.elements[(m, n)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn gauge_invariance(d in 4usize..24, seed in any::<u64>(), angle in 0.1f64..6.2) {
        let h = ginibre(d, seed);
        let dec = decompose(h.as_ref()).unwrap();
        let phases: Vec<c64> = (0..d).map(|m| c64::from_polar(1.0, angle * (1.0 + m as f64).sqrt())).collect();
        let re = dec.rephased(&phases).unwrap();
        let o = diag_obs(d, seed ^ 2);
        let a = matrix_elements(o.as_ref(), &dec, BasisKind::RightRight).unwrap();
        let b = matrix_elements(o.as_ref(), &re, BasisKind::RightRight).unwrap();
        let (ta, tb) = (corrected_elements(&a).unwrap(), corrected_elements(&b).unwrap());
        let (ga, gb) = (overlap_gram(&dec), overlap_gram(&re));
        for m in 0..d {
            for n in 0..d {
                prop_assert!((a.elements[(m, n)].norm() - b.elements[(m, n)].norm()).abs() < 1e-12);
                prop_assert!((ta.tilde[(m, n)].norm() - tb.tilde[(m, n)].norm()).abs() < 1e-12);
                prop_assert!((ga.get(m, n).norm() - gb.get(m, n).norm()).abs() < 1e-12);
            }
        }
        let w = EnergyWindow::disk(0.8).unwrap();
        let sa = window_samples(&a, &ta, dec.eigenvalues(), &w);
        let sb = window_samples(&b, &tb, re.eigenvalues(), &w);
        prop_assert_eq!(sa.diag.len(), sb.diag.len());
        for (x, y) in sa.diag.iter().zip(&sb.diag) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((sa.bare.rms() - sb.bare.rms()).abs() < 1e-12 || sa.bare.count == 0);
        prop_assert!((sa.corrected.rms() - sb.corrected.rms()).abs() < 1e-12 || sa.corrected.count == 0);
    }
}
