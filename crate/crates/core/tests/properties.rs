use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use kacrice::analytic::kac_rice::{kernel_bracket, rho};
use kacrice::analytic::matrices::ConditionalMatrixBundle;
use kacrice::analytic::{expected_zeros, CovarianceModel};
use kacrice::ensembles::{sample_qualls_trial, SpectralDesign};
use kacrice::harness::{ks_statistic, WidthRule};
use kacrice::moments3::{Route, TripleKernel};
use kacrice::mollify::{JointCovariance, Mollifier};
use kacrice::zeros::count_sign_changes;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samplers_are_pure(n in 1usize..300, seed in any::<u64>(), trial in 0u64..1000) {
        prop_assert_eq!(sample_qualls_trial(n, seed, trial).unwrap(), sample_qualls_trial(n, seed, trial).unwrap());
    }

    #[test]
    fn at_most_two_n_zeros(n in 1usize..200, seed in any::<u64>()) {
        let p = sample_qualls_trial(n, seed, 0).unwrap();
        prop_assert!(count_sign_changes(&p, (0.0, TAU), 8.0, n).unwrap().count <= 2 * n);
    }

    #[test]
    fn finer_grid_never_loses_zeros(n in 2usize..150, seed in any::<u64>()) {
        let p = sample_qualls_trial(n, seed, 1).unwrap();
        let coarse = count_sign_changes(&p, (0.0, TAU), 8.0, n).unwrap().count;
        let fine = count_sign_changes(&p, (0.0, TAU), 16.0, n).unwrap().count;
        prop_assert!(fine >= coarse);
    }

    #[test]
    fn shift_equivariance(n in 2usize..100, seed in any::<u64>(), a in 0.0..3.0f64, len in 0.2..3.0f64) {
        let p = sample_qualls_trial(n, seed, 2).unwrap();
        let direct = count_sign_changes(&p, (a, a + len), 8.0, n).unwrap().count;
        let shifted = count_sign_changes(&p.shifted(a), (0.0, len), 8.0, n).unwrap().count;
        prop_assert_eq!(direct, shifted);
    }

    #[test]
    fn sigma_determinant_factorizes(n in 2usize..200, u in 0.02..0.98f64) {
        let m = n as f64 + 0.5;
        // keep the lag at least one unit of the scaled variable from 0 and 2π
        let t = (1.0 + u * (2.0 * PI * m - 2.0)) / m;
        let b = ConditionalMatrixBundle::new(&CovarianceModel::exact(n), t).unwrap();
        let det = b.sigma.determinant();
        let fact = b.det_factorized();
        prop_assert!((det - fact).abs() <= 1e-9 * fact.abs(), "det {det} vs {fact}");
    }

    #[test]
    fn omega_is_psd(n in 2usize..200, u in 0.001..0.999f64) {
        let t = u * TAU;
        let b = ConditionalMatrixBundle::new(&CovarianceModel::exact(n), t).unwrap();
        let eig = b.omega.symmetric_eigenvalues();
        let scale = b.omega.abs().max();
        prop_assert!(eig.iter().all(|&e| e >= -1e-12 * scale));
        prop_assert!(rho(&CovarianceModel::exact(n), t).unwrap().abs() <= 1.0);
    }

    #[test]
    fn kernel_bracket_bounds(y in -1.0..=1.0f64) {
        let k = kernel_bracket(y);
        prop_assert!(k >= 1.0 - 1e-15 && k <= PI / 2.0 + 1e-15);
    }

    #[test]
    fn expected_count_is_linear(n in 1usize..1000, a in 0.0..3.0f64, len in 0.01..3.0f64) {
        let whole = expected_zeros(n, a, a + len).unwrap();
        let half = expected_zeros(n, a, a + len / 2.0).unwrap();
        prop_assert!((whole - 2.0 * half).abs() <= 1e-12 * whole);
    }

    #[test]
    fn mollifier_shape(big_m in 1.0..50.0f64, x in -500.0..500.0f64, k in -20_000i64..20_000) {
        let s = Mollifier::new(big_m, 400.5).unwrap();
        let v = s.value(x);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, s.value(-x));
        if x.abs() >= 8.0 * big_m {
            prop_assert_eq!(v, 0.0);
        }
        prop_assert!(s.fourier(k) >= 0.0);
    }

    #[test]
    fn ks_distance_in_unit_interval(xs in prop::collection::vec(-5.0..5.0f64, 100..300)) {
        let d = ks_statistic(&xs).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.distance));
        prop_assert!((0.0..=1.0).contains(&d.p_value));
        let mut rev = xs.clone();
        rev.reverse();
        prop_assert_eq!(ks_statistic(&rev).unwrap(), d);
    }

    #[test]
    fn width_rules_parse_back(beta in 0.0..1.0f64, w in 0.1..100.0f64) {
        prop_assert_eq!(WidthRule::parse(&format!("N^{beta}")).unwrap(), WidthRule::Power(beta));
        prop_assert_eq!(WidthRule::parse(&format!("{w}")).unwrap(), WidthRule::Fixed(w));
    }

    #[test]
    fn three_point_series_matches_direct(x in 0.02..0.1f64, d in 0.01..0.08f64) {
        let k = TripleKernel::new(CovarianceModel::sinc());
        let y = x + d;
        prop_assume!(y <= 0.1);
        let fs = k.reduced_det(x, y, Route::Series).unwrap();
        let fd = k.reduced_det(x, y, Route::Direct).unwrap();
        prop_assert!((fs - fd).abs() <= 1e-6 * fs.abs());
        let rs = k.reduced_r1(x, y, Route::Series).unwrap();
        let rd = k.reduced_r1(x, y, Route::Direct).unwrap();
        prop_assert!((rs - rd).abs() <= 1e-6 * rs.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coupled_spectrum_identity(n in 10usize..300, big_m in 1.0..20.0f64) {
        let cov = JointCovariance::new(n, big_m).unwrap();
        for k in [0i64, 1, n as i64 / 2, n as i64, n as i64 + 5] {
            let lhs = cov.rhat_joint(k).powi(2);
            let rhs = cov.rhat_base(k) * cov.rhat_mollified(k);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn coupled_paths_share_low_modes(n in 5usize..80, big_m in 1.0..10.0f64, seed in any::<u64>()) {
        let design = SpectralDesign::new(n, big_m, 1e-10).unwrap();
        let (base, moll) = design.sample(seed, 0);
        let g0 = base.gaussians();
        let g1 = moll.gaussians();
        prop_assert_eq!(&g0[..=n], &g1[..=n]);
        let (again, _) = design.sample(seed, 0);
        prop_assert_eq!(again.gaussians(), g0);
    }
}
