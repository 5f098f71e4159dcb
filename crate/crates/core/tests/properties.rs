use lve_core::contour::DEFAULT_NODES;
use lve_core::lve_expansion::{bkar_x_matrix, LabeledTree, WeakeningVector};
use lve_core::lvr_action::{action_s, jacobian_check, sigma_contour, sigma_direct};
use lve_core::matrix_core::{eigh, sample_gaussian, stream};
use lve_core::{Beta, Coupling, EnsembleSpec, FussCatalan, FussCatalanParams, KeyholeContour, ScalarMaps};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn max_abs(m: &lve_core::CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fuss_catalan_solves_its_equation(p in 2u32..=6, log_r in -3.0f64..3.0, arg in 0.01f64..PI, flip in any::<bool>()) {
        let fc = FussCatalan::new(FussCatalanParams::new(p).unwrap());
        let z = Complex64::from_polar(10f64.powf(log_r), if flip { -arg } else { arg });
        let t = fc.eval(z).unwrap();
        prop_assert!(fc.relative_residual(z, t) <= 1e-10);
    }

    #[test]
    fn fuss_catalan_conjugate_symmetric(p in 2u32..=5, log_r in -2.0f64..2.0, arg in 0.05f64..PI) {
        let fc = FussCatalan::new(FussCatalanParams::new(p).unwrap());
        let z = Complex64::from_polar(10f64.powf(log_r), arg);
        let (a, b) = (fc.eval(z).unwrap(), fc.eval(z.conj()).unwrap());
        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn quadratic_inverse_pair(m in 1e-3f64..0.1, arg in -2.7f64..2.7, re in -1.4f64..1.4, im in -1.4f64..1.4) {
        let c = Coupling::polar(2, m, arg, 0.2, 1.0).unwrap();
        let z = Complex64::new(re, im);
        prop_assume!(c.params().cut_geometry().cut_distance(c.lambda(), z) > 1e-6);
        prop_assert!(ScalarMaps::new(&c).inverse_residual(z).unwrap() <= 1e-9);
    }

    #[test]
    fn k_inverts_h_on_the_real_axis(p in 2u32..=4, lam in 1e-3f64..1.0, x in -5.0f64..5.0) {
        let maps = ScalarMaps::new(&Coupling::real(p, lam).unwrap());
        let back = maps.k(maps.h(x.into()).unwrap()).unwrap();
        prop_assert!((back - x).norm() <= 1e-10 * (1.0 + x.abs()));
    }

    #[test]
    fn jacobian_factors_positive(p in 2u32..=5, lam in 1e-6f64..10.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let r = jacobian_check(p, lam, &[a, b]).unwrap();
        prop_assert!(r.overall_positive);
        prop_assert!(r.consistency <= 1e-8);
    }

    #[test]
    fn prufer_round_trip(seq in (3usize..=8).prop_flat_map(|n| proptest::collection::vec(0..n, n - 2))) {
        let n = seq.len() + 2;
        let t = LabeledTree::from_prufer(n, &seq).unwrap();
        prop_assert_eq!(t.edges().len(), n - 1);
        prop_assert_eq!(t.to_prufer(), seq);
    }

    #[test]
    fn bkar_matrix_is_psd(seq in (3usize..=7).prop_flat_map(|n| proptest::collection::vec(0..n, n - 2)), seed in any::<u64>()) {
        let t = LabeledTree::from_prufer(seq.len() + 2, &seq).unwrap();
        let w = WeakeningVector::uniform(&t, &mut stream(seed, 0));
        let x = bkar_x_matrix(&t, &w);
        prop_assert!(x.diagonal().iter().all(|d| *d == 1.0));
        prop_assert!(x.symmetric_eigenvalues().min() >= -1e-12);
    }

    #[test]
    fn eigh_reconstructs(n in 1usize..=4, two in any::<bool>(), seed in any::<u64>()) {
        let spec = EnsembleSpec::new(n, if two { Beta::Two } else { Beta::One }).unwrap();
        let k = sample_gaussian(&spec, &mut stream(seed, 1));
        let s = eigh(&k).unwrap();
        let vals: Vec<Complex64> = s.eigenvalues.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        prop_assert!(max_abs(&(s.reconstruct(&vals) - k.matrix())) <= 1e-12 * (1.0 + s.spectral_radius()));
    }

    #[test]
    fn scalar_action_is_log_derivative(p in 2u32..=4, lam in 1e-3f64..0.5, x in -3.0f64..3.0, two in any::<bool>()) {
        let c = Coupling::real(p, lam).unwrap();
        let spec = EnsembleSpec::new(1, if two { Beta::Two } else { Beta::One }).unwrap();
        let s = lve_core::SpectralData::diagonal(vec![x]);
        let a = action_s(&c, &spec, &s).unwrap().total;
        let expected = ScalarMaps::new(&c).h_prime(x.into()).unwrap().ln();
        prop_assert!((a - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contour_sigma_matches_direct(p in 2u32..=3, m in 1e-3f64..0.2, arg in -2.7f64..2.7, n in 1usize..=3, seed in any::<u64>()) {
        let c = Coupling::polar(p, m, arg, 0.2, 1.0).unwrap();
        let spec = EnsembleSpec::new(n, Beta::Two).unwrap();
        let s = eigh(&sample_gaussian(&spec, &mut stream(seed, 2))).unwrap();
        let g = KeyholeContour::build(s.spectral_radius(), &c, DEFAULT_NODES).unwrap();
        let d = sigma_contour(&c, &g, &s).unwrap() - sigma_direct(&c, &s).unwrap();
        prop_assert!(max_abs(&d) <= 1e-6);
    }
}
