use std::f64::consts::PI;

use cfs_core::linalg::{self, c64, CMatrix, CVector, C64};
use cfs_core::minkowski::dirac::omega;
use cfs_core::minkowski::{
    build_minkowski_cfs, causal_recovery_report, local_correlation, plane_wave_eval, DiracAlgebra,
    DiracBasisSpec, FourVector, GaussianPacket, MomentumGrid, MomentumMode, RecoveryTolerances,
    SampleGrid, SpacetimeSample,
};
use cfs_core::seed::rng_for;
use cfs_core::{classify, product_spectrum, CfsError, SystemConfig};
use cfs_testkit::{best_matching_error, gaussian_overlap};
use proptest::prelude::*;
use rand::Rng;

fn algebra() -> DiracAlgebra {
    DiracAlgebra::new(1.0).unwrap()
}

fn per_mode_spec(count: usize, epsilon: f64) -> DiracBasisSpec {
    let alg = algebra();
    let modes = MomentumGrid::default().modes(&alg, count).unwrap();
    DiracBasisSpec::per_mode(alg, modes, epsilon)
        .unwrap()
        .orthonormalize()
        .unwrap()
}

/// γ⁰ of the Dirac representation, written out independently.
fn gamma0() -> CMatrix {
    linalg::diag_real(&[1.0, 1.0, -1.0, -1.0])
}

fn random_event(rng: &mut impl Rng) -> FourVector {
    std::array::from_fn(|_| rng.gen_range(-2.0..2.0))
}

fn inertia(m: &CMatrix) -> (usize, usize) {
    let (values, _) = linalg::hermitian_eigen(m);
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let cut = 1e-10 * scale;
    (
        values.iter().filter(|&&v| v > cut).count(),
        values.iter().filter(|&&v| v < -cut).count(),
    )
}

#[test]
fn gaussian_gram_matches_the_continuum_overlap() {
    let alg = algebra();
    let grid = MomentumGrid {
        p_max: 6.0,
        cells_per_axis: 25,
    };
    let (momenta, _) = grid.momenta(1.0).unwrap();
    let modes = grid.modes(&alg, 2 * momenta.len()).unwrap();
    let packets = [
        GaussianPacket {
            center: [0.0, 0.0, 0.0],
            width: 1.0,
            spin: 1,
        },
        GaussianPacket {
            center: [0.5, 0.0, 0.0],
            width: 1.0,
            spin: 1,
        },
        GaussianPacket {
            center: [0.0, 0.7, -0.3],
            width: 1.0,
            spin: 1,
        },
        GaussianPacket {
            center: [0.2, 0.2, 0.2],
            width: 1.0,
            spin: 2,
        },
    ];
    let spec = DiracBasisSpec::gaussian(alg, modes, &packets, 0.0).unwrap();
    let gram = spec.gram();
    for (i, a) in packets.iter().enumerate() {
        for (j, b) in packets.iter().enumerate() {
            let expected = if a.spin == b.spin {
                2.0 * PI * gaussian_overlap(a.center, b.center, 1.0)
            } else {
                0.0
            };
            let got = gram[(i, j)];
            assert!(
                (got - c64(expected, 0.0)).norm() <= 1e-6 * gram[(i, i)].re,
                "({i},{j}): {got} vs {expected}"
            );
        }
    }
    let ortho = spec.orthonormalize().unwrap();
    assert!(linalg::max_abs(&(ortho.gram() - CMatrix::identity(4, 4))) <= 1e-10);
}

#[test]
fn local_correlation_matches_the_dense_formula() {
    let spec = per_mode_spec(16, 0.3);
    let mut rng = rng_for(1, "events");
    for _ in 0..10 {
        let x = random_event(&mut rng);
        let e = CMatrix::from_fn(4, 16, |r, k| spec.regularized_eval(k, x)[r]);
        let expected = -(e.adjoint() * gamma0() * &e);
        let got = local_correlation(x, &spec).unwrap().dense();
        assert!(
            linalg::max_abs(&(got - &expected)) <= 1e-12 * linalg::max_abs(&expected).max(1e-300)
        );
        let (p, q) = inertia(&expected);
        assert!(p <= 2 && q <= 2);
    }
}

#[test]
fn each_basis_vector_contributes_its_spin_norm() {
    // spin dimension 2 needs f ≥ 4, so the one-vector case is read off the
    // diagonal: (e_k | F(x) e_k) = −≺v_k|v_k≻ with v_k the value of e_k at x
    let spec = per_mode_spec(4, 0.2);
    let x = [0.3, -0.1, 0.4, 0.2];
    let f = local_correlation(x, &spec).unwrap().dense();
    for k in 0..4 {
        let v = spec.regularized_eval(k, x);
        let expected = -(v.dotc(&(gamma0() * &v))).re;
        assert!((f[(k, k)] - c64(expected, 0.0)).norm() <= 1e-14);
    }
}

#[test]
fn non_orthonormal_specs_are_rejected() {
    let alg = algebra();
    let modes = MomentumGrid::default().modes(&alg, 4).unwrap();
    let raw = DiracBasisSpec::per_mode(alg, modes, 0.1).unwrap();
    assert!(!raw.is_orthonormal());
    assert!(matches!(
        local_correlation([0.0; 4], &raw),
        Err(CfsError::Validation(_))
    ));
}

#[test]
fn translation_conjugates_by_a_diagonal_phase() {
    let spec = per_mode_spec(12, 0.2);
    let shift = [0.7, 0.5, -0.25, 1.0];
    let x = [0.1, 0.2, 0.3, -0.4];
    let moved: FourVector = std::array::from_fn(|k| x[k] + shift[k]);
    let phases: Vec<C64> = spec.modes().iter().map(|m| m.phase(shift)).collect();
    let d = CMatrix::from_diagonal(&CVector::from_vec(phases));
    let expected = d.adjoint() * local_correlation(x, &spec).unwrap().dense() * &d;
    let got = local_correlation(moved, &spec).unwrap().dense();
    assert!(linalg::max_abs(&(got - &expected)) <= 1e-12 * linalg::max_abs(&expected));
}

#[test]
fn sample_construction_keeps_every_point() {
    let spec = per_mode_spec(8, 0.2);
    // the second point repeats the first: both stay in the support
    let sample = SpacetimeSample::new(
        vec![[0.0; 4], [0.0; 4], [1.0, 0.0, 0.0, 0.0]],
        vec![0.5, 0.5, 2.0],
    )
    .unwrap();
    let rho = build_minkowski_cfs(&sample, &spec).unwrap();
    assert_eq!(rho.len(), 3);
    assert_eq!(rho.weights(), &[0.5, 0.5, 2.0]);
    assert_eq!(rho.points()[0], rho.points()[1]);
    assert_eq!(*rho.config(), SystemConfig::new(8, 2).unwrap());
    let single = SpacetimeSample::new(vec![[0.0; 4]], vec![0.125]).unwrap();
    assert_eq!(
        build_minkowski_cfs(&single, &spec).unwrap().weights(),
        &[0.125]
    );
    assert!(SpacetimeSample::new(vec![[0.0; 4]], vec![0.0]).is_err());
}

#[test]
fn recovery_fractions_lie_in_the_unit_interval() {
    let spec = per_mode_spec(16, 0.2);
    // same position, different times: every pair is timelike in Minkowski space
    let points: Vec<FourVector> = (0..5).map(|k| [0.4 * k as f64, 0.0, 0.0, 0.0]).collect();
    let sample = SpacetimeSample::new(points, vec![1.0; 5]).unwrap();
    let report = causal_recovery_report(&sample, &spec, &RecoveryTolerances::default()).unwrap();
    assert_eq!(report.pairs(), 10);
    assert_eq!(report.confusion[0].iter().sum::<usize>(), 0);
    let t = report.agreement.timelike.unwrap();
    assert!((0.0..=1.0).contains(&t));
    assert_eq!(report.agreement.spacelike, None);
}

#[test]
fn sample_grid_has_uniform_cell_volumes() {
    let grid = SampleGrid {
        counts: [1, 4, 4, 4],
        spacing: [1.0, 0.5, 0.5, 0.5],
        origin: [0.0; 4],
    };
    let sample = grid.to_sample().unwrap();
    assert_eq!(sample.len(), 64);
    assert!(sample.cell_volumes().iter().all(|&v| v == 0.125));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plane_waves_solve_the_dirac_equation(px in -5.0f64..5.0, py in -5.0f64..5.0, pz in -5.0f64..5.0, spin in 1u8..=2) {
        let alg = algebra();
        let mode = MomentumMode::new(&alg, [px, py, pz], spin, 1.0).unwrap();
        prop_assert!(mode.omega >= alg.mass());
        prop_assert!(alg.dirac_residual(mode.p_vec, &mode.spinor) <= 1e-10);
        prop_assert!((mode.spinor.norm() - 1.0).abs() <= 1e-14);
        let at_origin = plane_wave_eval(&mode, [0.0; 4]);
        prop_assert!((&at_origin - &mode.spinor * c64((2.0 * PI).powf(-1.5), 0.0)).norm() <= 1e-15);
        let period = 2.0 * PI / omega(mode.p_vec, 1.0);
        let later = plane_wave_eval(&mode, [period, 0.0, 0.0, 0.0]);
        prop_assert!((later - &at_origin).norm() <= 1e-12);
    }

    #[test]
    fn pair_spectra_are_translation_invariant(seed in any::<u64>(), spatial in any::<bool>()) {
        let spec = per_mode_spec(32, 0.2);
        let cfg = SystemConfig::new(32, 2).unwrap();
        let mut rng = rng_for(seed, "translation");
        let (x, y) = (random_event(&mut rng), random_event(&mut rng));
        let mut shift = random_event(&mut rng);
        if spatial { shift[0] = 0.0 } else { shift[1..].fill(0.0) }
        let add = |a: FourVector| -> FourVector { std::array::from_fn(|k| a[k] + shift[k]) };
        let (fx, fy) = (local_correlation(x, &spec).unwrap(), local_correlation(y, &spec).unwrap());
        let (gx, gy) = (local_correlation(add(x), &spec).unwrap(), local_correlation(add(y), &spec).unwrap());
        let a = product_spectrum(&fx, &fy, &cfg).unwrap();
        let b = product_spectrum(&gx, &gy, &cfg).unwrap();
        prop_assert!(best_matching_error(&a.values, &b.values) <= 1e-9 * a.max_modulus().max(1e-300));
        let (ca, cb) = (classify(&fx, &fy, &cfg).unwrap(), classify(&gx, &gy, &cfg).unwrap());
        // the outcome may only differ for spectra sitting on a class boundary
        if (ca.spread - cfg.tol_eq).abs() > 1e-7 && (ca.max_imag - cfg.tol_eq).abs() > 1e-7 {
            prop_assert_eq!(ca.kind, cb.kind);
        }
    }

    #[test]
    fn operator_norm_decreases_with_epsilon(seed in any::<u64>(), eps in 0.0f64..1.0, delta in 0.01f64..1.0) {
        let spec = per_mode_spec(24, eps);
        let wider = spec.with_epsilon(eps + delta).unwrap();
        let x = random_event(&mut rng_for(seed, "eps"));
        let a = local_correlation(x, &spec).unwrap().operator_norm();
        let b = local_correlation(x, &wider).unwrap().operator_norm();
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn vacuum_points_have_spin_dimension_two(seed in any::<u64>()) {
        let spec = per_mode_spec(32, 0.1);
        let x = random_event(&mut rng_for(seed, "rank"));
        let dense = local_correlation(x, &spec).unwrap().dense();
        let (p, q) = inertia(&dense);
        prop_assert!(p <= 2 && q <= 2 && p + q <= 4);
    }
}
