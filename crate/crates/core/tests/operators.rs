use cfs_core::linalg::{self, c64, CMatrix};
use cfs_core::seed::rng_for;
use cfs_core::{
    make_point_from_spectral, point_spectrum, product_spectrum, CfsError, OperatorPoint,
    SystemConfig,
};
use cfs_testkit::{best_matching_error, dense_product_spectrum};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = SystemConfig> {
    (1usize..=3, 0usize..=6).prop_map(|(n, extra)| SystemConfig::new(2 * n + extra, n).unwrap())
}

fn pair(cfg: &SystemConfig, seed: u64) -> (OperatorPoint, OperatorPoint) {
    let mut rng = rng_for(seed, "pair");
    (
        OperatorPoint::random(&mut rng, cfg),
        OperatorPoint::random(&mut rng, cfg),
    )
}

fn relative_error(a: &[cfs_core::linalg::C64], b: &[cfs_core::linalg::C64]) -> f64 {
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0_f64, |m, z| m.max(z.norm()))
        .max(f64::MIN_POSITIVE);
    best_matching_error(a, b) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_spectrum_matches_dense_oracle(cfg in shape(), seed in any::<u64>()) {
        let (x, y) = pair(&cfg, seed);
        let fast = product_spectrum(&x, &y, &cfg).unwrap();
        let oracle = dense_product_spectrum(&x.dense(), &y.dense(), cfg.rank_bound());
        prop_assert_eq!(fast.values.len(), cfg.rank_bound());
        prop_assert!(relative_error(&fast.values, &oracle) <= 1e-9);
    }

    #[test]
    fn product_spectrum_is_symmetric(cfg in shape(), seed in any::<u64>()) {
        let (x, y) = pair(&cfg, seed);
        let xy = product_spectrum(&x, &y, &cfg).unwrap();
        let yx = product_spectrum(&y, &x, &cfg).unwrap();
        prop_assert!(relative_error(&xy.values, &yx.values) <= 1e-9);
    }

    #[test]
    fn product_spectrum_is_conjugation_invariant(cfg in shape(), seed in any::<u64>()) {
        let (x, y) = pair(&cfg, seed);
        let u = linalg::random_unitary(&mut rng_for(seed, "u"), cfg.hilbert_dim);
        let a = product_spectrum(&x, &y, &cfg).unwrap();
        let b = product_spectrum(&x.conjugated(&u), &y.conjugated(&u), &cfg).unwrap();
        prop_assert!(relative_error(&a.values, &b.values) <= 1e-9);
    }

    #[test]
    fn random_points_respect_rank_and_inertia(cfg in shape(), seed in any::<u64>()) {
        let (x, _) = pair(&cfg, seed);
        let dense = x.dense();
        prop_assert!(linalg::hermiticity_defect(&dense) <= 1e-12 * linalg::max_abs(&dense).max(1.0));
        let (values, _) = linalg::hermitian_eigen(&dense);
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let pos = values.iter().filter(|&&v| v > 1e-10 * scale).count();
        let neg = values.iter().filter(|&&v| v < -1e-10 * scale).count();
        prop_assert!(pos <= cfg.spin_dim && neg <= cfg.spin_dim);
        let ps = point_spectrum(&x, &cfg);
        prop_assert_eq!(ps.signature, (pos, neg));
    }

    #[test]
    fn scaling_scales_the_spectrum(cfg in shape(), seed in any::<u64>(), s in 0.1f64..10.0) {
        let (x, y) = pair(&cfg, seed);
        let a = product_spectrum(&x, &y, &cfg).unwrap();
        let b = product_spectrum(&x.scaled(s), &y, &cfg).unwrap();
        let scaled: Vec<_> = a.values.iter().map(|z| z * s).collect();
        prop_assert!(relative_error(&scaled, &b.values) <= 1e-9);
    }
}

#[test]
fn trace_and_apply_agree_with_dense() {
    let cfg = SystemConfig::new(7, 2).unwrap();
    let (x, _) = pair(&cfg, 11);
    let dense = x.dense();
    assert!((x.trace() - dense.trace().re).abs() < 1e-12 * linalg::max_abs(&dense).max(1.0));
    let v = linalg::gaussian_matrix(&mut rng_for(1, "v"), 7, 3);
    assert!(
        linalg::max_abs(&(x.apply_matrix(&v) - &dense * &v))
            < 1e-12 * linalg::max_abs(&dense) * 10.0
    );
}

#[test]
fn spectral_construction_reproduces_the_operator() {
    let cfg = SystemConfig::new(5, 2).unwrap();
    let u = linalg::random_unitary(&mut rng_for(2, "u"), 5);
    let vectors = u.columns(0, 3).into_owned();
    let x = make_point_from_spectral(&vectors, &[1.5, -0.5, 2.0], &cfg).unwrap();
    let expected = &vectors * linalg::diag_real(&[1.5, -0.5, 2.0]) * vectors.adjoint();
    assert!(linalg::max_abs(&(x.dense() - expected)) < 1e-12);
}

#[test]
fn too_many_positive_directions_are_rejected() {
    let cfg = SystemConfig::new(5, 1).unwrap();
    let u = linalg::random_unitary(&mut rng_for(3, "u"), 5);
    let vectors = u.columns(0, 2).into_owned();
    assert!(matches!(
        make_point_from_spectral(&vectors, &[1.0, 2.0], &cfg),
        Err(CfsError::Constraint(_))
    ));
}

#[test]
fn hilbert_space_smaller_than_spin_space_is_rejected() {
    assert!(SystemConfig::new(3, 2).is_err());
    assert!(SystemConfig::new(4, 0).is_err());
}

#[test]
fn zero_point_has_zero_spectrum() {
    let cfg = SystemConfig::new(4, 1).unwrap();
    let (x, _) = pair(&cfg, 4);
    let s = product_spectrum(&OperatorPoint::zero(&cfg), &x, &cfg).unwrap();
    assert!(s.values.iter().all(|z| *z == c64(0.0, 0.0)));
}

#[test]
fn non_hermitian_form_is_rejected() {
    let cfg = SystemConfig::new(4, 1).unwrap();
    let e = CMatrix::identity(2, 4);
    let mut form = CMatrix::identity(2, 2);
    form[(0, 1)] = c64(0.0, 1.0);
    assert!(OperatorPoint::new(e, form, &cfg).is_err());
}
