//! Randomized identity suite for the operator and spin-geometry layers.
//!
//! Every identity is reduced to a relative residual; the suite passes when
//! each maximum residual stays within its tolerance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::{constraint_report, DiscreteMeasure};
use crate::error::Result;
use crate::linalg::{self, multiset_distance, CMatrix, C64};
use crate::minkowski::DiracAlgebra;
use crate::operators::{product_spectrum, OperatorPoint, SystemConfig};
use crate::seed::{derive_seed, rng_for};
use crate::spin::{self, build_spin_frame, kernel, kernel_from_wave_functions, SpinFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "CheckConfig::default_instances")]
    pub instances: usize,
    #[serde(default = "CheckConfig::default_hilbert_dims")]
    pub hilbert_dims: Vec<usize>,
    #[serde(default = "CheckConfig::default_spin_dims")]
    pub spin_dims: Vec<usize>,
    #[serde(default = "CheckConfig::default_tolerance")]
    pub tolerance: f64,
    /// Negative control: flips the sign of one kernel entry.
    #[serde(default)]
    pub inject_kernel_sign_flip: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            instances: Self::default_instances(),
            hilbert_dims: Self::default_hilbert_dims(),
            spin_dims: Self::default_spin_dims(),
            tolerance: Self::default_tolerance(),
            inject_kernel_sign_flip: false,
        }
    }
}

impl CheckConfig {
    fn default_instances() -> usize {
        20
    }

    fn default_hilbert_dims() -> Vec<usize> {
        vec![4, 8, 16]
    }

    fn default_spin_dims() -> Vec<usize> {
        vec![1, 2, 3]
    }

    fn default_tolerance() -> f64 {
        1e-9
    }

    /// All admissible `(f, n)` combinations, in configuration order.
    fn shapes(&self) -> Result<Vec<SystemConfig>> {
        let shapes: Vec<SystemConfig> = self
            .hilbert_dims
            .iter()
            .flat_map(|&f| {
                self.spin_dims
                    .iter()
                    .filter_map(move |&n| SystemConfig::new(f, n).ok())
            })
            .collect();
        if shapes.is_empty() {
            return Err(crate::error::validation(
                "no admissible (hilbert_dim, spin_dim) combination",
            ));
        }
        Ok(shapes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub seed: u64,
    pub instances: usize,
    pub passed: bool,
    pub identities: Vec<IdentityResult>,
}

#[derive(Default)]
struct Tracker {
    worst: Vec<(&'static str, f64, f64)>,
}

impl Tracker {
    fn note(&mut self, name: &'static str, residual: f64, tolerance: f64) {
        let residual = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual
        };
        match self.worst.iter_mut().find(|(n, _, _)| *n == name) {
            Some(entry) => entry.1 = entry.1.max(residual),
            None => self.worst.push((name, residual, tolerance)),
        }
    }
}

fn relative_multiset(a: &[C64], b: &[C64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0_f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        0.0
    } else {
        multiset_distance(a, b) / scale
    }
}

/// The `k` eigenvalues of largest modulus of a dense matrix, zero-padded.
fn leading_eigenvalues(m: &CMatrix, k: usize) -> Vec<C64> {
    let mut values = linalg::eigenvalues(m);
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    values.truncate(k);
    values.resize(k, C64::new(0.0, 0.0));
    values
}

fn maybe_corrupt(mut k: CMatrix, inject: bool) -> CMatrix {
    if inject && k.nrows() > 0 && k.ncols() > 0 {
        k[(0, 0)] = -k[(0, 0)];
    }
    k
}

fn signs(frame: &SpinFrame) -> CMatrix {
    linalg::diag_real(frame.signs())
}

fn check_instance(
    cfg: &SystemConfig,
    check: &CheckConfig,
    seed: u64,
    t: &mut Tracker,
) -> Result<()> {
    let tol = check.tolerance;
    let mut rng = rng_for(seed, "instance");
    let x = OperatorPoint::random(&mut rng, cfg);
    let y = OperatorPoint::random(&mut rng, cfg);
    let (dx, dy) = (x.dense(), y.dense());
    let dxy = &dx * &dy;
    let scale = x.operator_norm() * y.operator_norm();

    let s_xy = product_spectrum(&x, &y, cfg)?;
    let s_yx = product_spectrum(&y, &x, cfg)?;
    t.note(
        "product_spectrum_vs_dense",
        relative_multiset(&s_xy.values, &leading_eigenvalues(&dxy, cfg.rank_bound())),
        tol,
    );
    t.note(
        "product_spectrum_symmetry",
        relative_multiset(&s_xy.values, &s_yx.values),
        tol,
    );

    let u = linalg::random_unitary(&mut rng, cfg.hilbert_dim);
    let s_conj = product_spectrum(&x.conjugated(&u), &y.conjugated(&u), cfg)?;
    t.note(
        "conjugation_invariance",
        relative_multiset(&s_xy.values, &s_conj.values),
        tol,
    );

    let (frame_x, frame_y) = (build_spin_frame(&x, cfg)?, build_spin_frame(&y, cfg)?);
    for frame in [&frame_x, &frame_y] {
        t.note(
            "frame_pseudo_orthonormality",
            linalg::max_abs(&(frame.gram() - signs(frame))),
            1e-10,
        );
    }

    let k_xy = maybe_corrupt(
        kernel(&frame_x, &frame_y).entries,
        check.inject_kernel_sign_flip,
    );
    let k_yx = kernel(&frame_y, &frame_x).entries;
    let k_scale = linalg::max_abs(&k_xy)
        .max(linalg::max_abs(&k_yx))
        .max(f64::MIN_POSITIVE);
    // ≺u|P(x,y)v≻_x = ≺P(y,x)u|v≻_y for all u, v
    let symmetry = &signs(&frame_x) * &k_xy - k_yx.adjoint() * &signs(&frame_y);
    t.note("kernel_symmetry", linalg::max_abs(&symmetry) / k_scale, tol);

    let chain = &k_xy * &k_yx;
    let mut chain_power = CMatrix::identity(chain.nrows(), chain.nrows());
    let mut dense_power = CMatrix::identity(cfg.hilbert_dim, cfg.hilbert_dim);
    for p in 1..=4 {
        chain_power = &chain_power * &chain;
        dense_power = &dense_power * &dxy;
        let residual = (chain_power.trace() - dense_power.trace()).norm()
            / scale.powi(p).max(f64::MIN_POSITIVE);
        t.note("closed_chain_trace_powers", residual, tol);
    }

    let k_xx = maybe_corrupt(
        kernel(&frame_x, &frame_x).entries,
        check.inject_kernel_sign_flip,
    );
    let residual = (k_xx.trace().re - x.trace()).abs() / x.operator_norm().max(f64::MIN_POSITIVE);
    t.note("kernel_trace", residual, tol);

    let basis = linalg::random_unitary(&mut rng, cfg.hilbert_dim);
    let from_waves = kernel_from_wave_functions(&frame_x, &frame_y, &basis)?.entries;
    t.note(
        "wave_function_representation",
        linalg::max_abs(&(from_waves - &k_xy)) / k_scale,
        tol,
    );

    let reference = spin::closed_chain_spectrum(&frame_x, &frame_y, cfg);
    let (px, qx) = frame_x.signature();
    let (py, qy) = frame_y.signature();
    let gx = spin::gauge_transform(&frame_x, &spin::random_pseudo_unitary(px, qx, rng.gen())?)?;
    let gy = spin::gauge_transform(&frame_y, &spin::random_pseudo_unitary(py, qy, rng.gen())?)?;
    let mut gauged = linalg::eigenvalues(&(kernel(&gx, &gy).entries * kernel(&gy, &gx).entries));
    gauged.resize(cfg.rank_bound().max(gauged.len()), C64::new(0.0, 0.0));
    t.note(
        "gauge_invariance",
        relative_multiset(&reference, &gauged),
        tol,
    );

    let weights: Vec<f64> = (0..3).map(|_| 0.5 + rng.gen::<f64>()).collect();
    let z = OperatorPoint::random(&mut rng, cfg);
    let rho = DiscreteMeasure::new(*cfg, vec![x.clone(), y.clone(), z], weights)?;
    let (a, b) = (
        constraint_report(&rho),
        constraint_report(&rho.conjugated(&u)),
    );
    let rel = |p: f64, q: f64| (p - q).abs() / p.abs().max(q.abs()).max(f64::MIN_POSITIVE);
    let worst = rel(a.action, b.action)
        .max(rel(a.boundedness, b.boundedness))
        .max(rel(a.trace_integral, b.trace_integral))
        .max(rel(a.volume, b.volume));
    t.note("report_conjugation_invariance", worst, 1e-10);
    Ok(())
}

/// Runs the suite on `check.instances` random instances derived from `seed`.
pub fn run_identity_suite(check: &CheckConfig, seed: u64) -> Result<CheckSummary> {
    let shapes = check.shapes()?;
    let mut tracker = Tracker::default();
    for i in 0..check.instances {
        let cfg = shapes[i % shapes.len()];
        check_instance(
            &cfg,
            check,
            derive_seed(seed, &format!("check-{i}")),
            &mut tracker,
        )?;
    }
    let algebra = DiracAlgebra::new(1.0)?;
    tracker.note(
        "dirac_anticommutator",
        algebra.anticommutator_residual(),
        1e-12,
    );
    tracker.note("dirac_hermiticity", algebra.hermiticity_residual(), 1e-12);

    let identities: Vec<IdentityResult> = tracker
        .worst
        .into_iter()
        .map(|(name, max_residual, tolerance)| IdentityResult {
            name: name.to_string(),
            max_residual,
            tolerance,
            passed: max_residual <= tolerance,
        })
        .collect();
    Ok(CheckSummary {
        seed,
        instances: check.instances,
        passed: identities.iter().all(|r| r.passed),
        identities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let summary = run_identity_suite(
            &CheckConfig {
                instances: 9,
                ..CheckConfig::default()
            },
            1,
        )
        .unwrap();
        for r in &summary.identities {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn sign_flip_is_detected() {
        let check = CheckConfig {
            instances: 3,
            inject_kernel_sign_flip: true,
            ..CheckConfig::default()
        };
        let summary = run_identity_suite(&check, 1).unwrap();
        assert!(!summary.passed);
    }
}
