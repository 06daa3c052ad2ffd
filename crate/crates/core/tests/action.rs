use cfs_core::linalg::{self, c64, CMatrix, C64};
use cfs_core::seed::rng_for;
use cfs_core::{
    action, boundedness_integrand, classify, constraint_report, lagrangian,
    make_point_from_spectral, push_forward, CausalKind, DiscreteMeasure, OperatorPoint,
    SystemConfig,
};
use cfs_testkit::{brute_force_report, dense_product_spectrum};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn measure(cfg: SystemConfig, seed: u64, len: usize) -> DiscreteMeasure {
    let mut rng = rng_for(seed, "measure");
    let points = (0..len)
        .map(|_| OperatorPoint::random(&mut rng, &cfg))
        .collect();
    let weights = (0..len).map(|k| 0.25 + (k as f64 * 0.37).fract()).collect();
    DiscreteMeasure::new(cfg, points, weights).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Block-diagonal pair whose product is `a_k a'_k` times a rotation in each
/// 2×2 block, so every eigenvalue has modulus `a_k a'_k`.
fn equal_moduli_pair(
    n: usize,
    product: f64,
    angles: &[f64],
) -> (SystemConfig, OperatorPoint, OperatorPoint) {
    let cfg = SystemConfig::new(2 * n, n).unwrap();
    let f = 2 * n;
    let mut xv = CMatrix::zeros(f, f);
    let mut yv = CMatrix::zeros(f, f);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 0..n {
        let a = 0.5 + k as f64;
        let (c, s) = (angles[k].cos(), angles[k].sin());
        let (i, j) = (2 * k, 2 * k + 1);
        xv[(i, i)] = c64(1.0, 0.0);
        xv[(j, j)] = c64(1.0, 0.0);
        yv[(i, i)] = c64(c, 0.0);
        yv[(j, i)] = c64(s, 0.0);
        yv[(i, j)] = c64(-s, 0.0);
        yv[(j, j)] = c64(c, 0.0);
        xs.extend([a, -a]);
        ys.extend([product / a, -product / a]);
    }
    let x = make_point_from_spectral(&xv, &xs, &cfg).unwrap();
    let y = make_point_from_spectral(&yv, &ys, &cfg).unwrap();
    (cfg, x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn report_matches_brute_force(n in 1usize..=2, extra in 0usize..=3, len in 1usize..=4, seed in any::<u64>()) {
        let rho = measure(SystemConfig::new(2 * n + extra, n).unwrap(), seed, len);
        let dense: Vec<_> = rho.points().iter().map(|p| p.dense()).collect();
        let (vol, tr, bound, act) = brute_force_report(&dense, rho.weights(), n);
        let r = constraint_report(&rho);
        prop_assert!(rel(r.volume, vol) <= 1e-12);
        prop_assert!((r.trace_integral - tr).abs() <= 1e-10 * bound.sqrt().max(1.0));
        prop_assert!(rel(r.boundedness, bound) <= 1e-9);
        prop_assert!((r.action - act).abs() <= 1e-9 * bound);
    }

    #[test]
    fn lagrangian_is_symmetric_and_nonnegative(n in 1usize..=3, seed in any::<u64>()) {
        let cfg = SystemConfig::new(2 * n + 1, n).unwrap();
        let rho = measure(cfg, seed, 2);
        let (x, y) = (&rho.points()[0], &rho.points()[1]);
        let lxy = lagrangian(x, y, &cfg).unwrap();
        let lyx = lagrangian(y, x, &cfg).unwrap();
        prop_assert!(lxy >= 0.0);
        prop_assert!((lxy - lyx).abs() <= 1e-9 * boundedness_integrand(x, y, &cfg).unwrap());
    }

    #[test]
    fn lagrangian_is_bounded_by_the_boundedness_integrand(n in 1usize..=3, seed in any::<u64>()) {
        let cfg = SystemConfig::new(2 * n, n).unwrap();
        let rho = measure(cfg, seed, 2);
        let (x, y) = (&rho.points()[0], &rho.points()[1]);
        // each (|λi| − |λj|)² ≤ (Σ|λ|)², summed over 4n² pairs and divided by 4n
        let bound = n as f64 * boundedness_integrand(x, y, &cfg).unwrap();
        prop_assert!(lagrangian(x, y, &cfg).unwrap() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn report_is_invariant_under_conjugation_and_relabeling(len in 1usize..=5, seed in any::<u64>()) {
        let rho = measure(SystemConfig::new(5, 2).unwrap(), seed, len);
        let mut rng = rng_for(seed, "perm");
        let u = linalg::random_unitary(&mut rng, 5);
        let mut map: Vec<usize> = (0..len).collect();
        map.shuffle(&mut rng);
        let base = constraint_report(&rho);
        for other in [rho.conjugated(&u), push_forward(&rho, &map).unwrap()] {
            let r = constraint_report(&other);
            prop_assert!(rel(base.action, r.action) <= 1e-10);
            prop_assert!(rel(base.boundedness, r.boundedness) <= 1e-10);
            prop_assert!((base.trace_integral - r.trace_integral).abs() <= 1e-10 * base.boundedness.sqrt().max(1.0));
            prop_assert!(rel(base.volume, r.volume) <= 1e-14);
        }
    }

    #[test]
    fn functionals_are_quadratic_in_the_weights(len in 1usize..=4, seed in any::<u64>(), s in 0.1f64..10.0) {
        let rho = measure(SystemConfig::new(4, 1).unwrap(), seed, len);
        let a = constraint_report(&rho);
        let b = constraint_report(&rho.with_scaled_weights(s).unwrap());
        prop_assert!(rel(b.action, s * s * a.action) <= 1e-10 || (b.action - s * s * a.action).abs() <= 1e-12 * b.boundedness);
        prop_assert!(rel(b.boundedness, s * s * a.boundedness) <= 1e-10);
        prop_assert!(rel(b.volume, s * a.volume) <= 1e-14);
    }

    #[test]
    fn equal_moduli_pairs_have_vanishing_lagrangian(n in 1usize..=3, product in 0.1f64..5.0, seed in any::<u64>()) {
        let mut rng = rng_for(seed, "angles");
        let angles: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0.1..1.4)).collect();
        let (cfg, x, y) = equal_moduli_pair(n, product, &angles);
        let l = lagrangian(&x, &y, &cfg).unwrap();
        prop_assert!(l <= 1e-18 * product * product, "L = {l}");
        prop_assert_eq!(classify(&x, &y, &cfg).unwrap().kind, CausalKind::Spacelike);
    }

    #[test]
    fn classification_agrees_with_dense_spectrum(n in 1usize..=2, seed in any::<u64>()) {
        let cfg = SystemConfig::new(2 * n + 1, n).unwrap();
        let rho = measure(cfg, seed, 2);
        let (x, y) = (&rho.points()[0], &rho.points()[1]);
        let oracle = dense_product_spectrum(&x.dense(), &y.dense(), 2 * n);
        let max = oracle.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let min = oracle.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
        let imag = oracle.iter().fold(0.0_f64, |m, z| m.max(z.im.abs())) / max;
        let spread = (max - min) / max;
        // skip instances too close to a class boundary to be decided reliably
        prop_assume!((spread - cfg.tol_eq).abs() > 1e-6 && (imag - cfg.tol_eq).abs() > 1e-6);
        let expected = if spread <= cfg.tol_eq {
            CausalKind::Spacelike
        } else if imag <= cfg.tol_eq {
            CausalKind::Timelike
        } else {
            CausalKind::Lightlike
        };
        prop_assert_eq!(classify(x, y, &cfg).unwrap().kind, expected);
    }
}

#[test]
fn a_point_with_itself_is_timelike_when_moduli_differ() {
    let cfg = SystemConfig::new(3, 1).unwrap();
    let u = linalg::random_unitary(&mut rng_for(1, "u"), 3);
    let x = make_point_from_spectral(&u.columns(0, 2).into_owned(), &[2.0, -0.5], &cfg).unwrap();
    let rel = classify(&x, &x, &cfg).unwrap();
    assert_eq!(rel.kind, CausalKind::Timelike);
    assert!((rel.spread - (4.0 - 0.25) / 4.0).abs() < 1e-12);
}

#[test]
fn single_point_action_is_the_diagonal_lagrangian() {
    let cfg = SystemConfig::new(4, 1).unwrap();
    let x = make_point_from_spectral(&CMatrix::identity(4, 2), &[3.0, -1.0], &cfg).unwrap();
    let rho = DiscreteMeasure::new(cfg, vec![x], vec![2.0]).unwrap();
    // spectrum of x² is {9, 1}: L = (1/4)·2·(9 − 1)² = 32, weighted by c² = 4
    assert!((action(&rho) - 128.0).abs() < 1e-10);
    assert!((constraint_report(&rho).boundedness - 400.0).abs() < 1e-10);
    assert!((constraint_report(&rho).trace_integral - 4.0).abs() < 1e-12);
}

#[test]
fn invalid_measures_are_rejected() {
    let cfg = SystemConfig::new(4, 1).unwrap();
    let x = OperatorPoint::zero(&cfg);
    assert!(DiscreteMeasure::new(cfg, vec![x.clone()], vec![-1.0]).is_err());
    assert!(DiscreteMeasure::new(cfg, vec![x.clone()], vec![1.0, 2.0]).is_err());
    assert!(DiscreteMeasure::new(cfg, vec![x], vec![f64::NAN]).is_err());
    let rho = measure(cfg, 0, 3);
    assert!(push_forward(&rho, &[0, 0, 1]).is_err());
    assert!(push_forward(&rho, &[0, 1]).is_err());
}

#[test]
fn equal_moduli_spectrum_is_complex_with_common_modulus() {
    let (cfg, x, y) = equal_moduli_pair(2, 1.5, &[0.3, 0.9]);
    let s = cfs_core::product_spectrum(&x, &y, &cfg).unwrap();
    for z in &s.values {
        assert!((z.norm() - 1.5).abs() < 1e-12);
    }
    assert!(s.values.iter().any(|z: &C64| z.im.abs() > 0.1));
}
