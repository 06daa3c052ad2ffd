//! The regularized Minkowski vacuum as a causal fermion system of spin
//! dimension two.
//!
//! Units: `m = 1` unless configured otherwise; lengths and `ε` are in units
//! of `1/m`.

pub mod basis;
pub mod dirac;
pub mod recovery;
pub mod sample;

use rayon::prelude::*;

pub use basis::{DiracBasisSpec, GaussianPacket, MomentumGrid};
pub use dirac::{plane_wave_eval, DiracAlgebra, FourVector, MomentumMode};
pub use recovery::{
    causal_recovery_report, minkowski_relation, recovery_from_measure, RecoveryReport,
    RecoveryTolerances,
};
pub use sample::{SampleGrid, SpacetimeSample};

use crate::action::DiscreteMeasure;
use crate::error::{validation, Result};
use crate::linalg::real;
use crate::operators::{OperatorPoint, SystemConfig};

/// System configuration of the vacuum: `f` basis vectors, spin dimension 2.
pub fn vacuum_config(spec: &DiracBasisSpec) -> Result<SystemConfig> {
    SystemConfig::new(spec.dim(), 2)
}

/// `F(x)` with `(ψ|F(x)φ) = −≺Rψ(x)|Rφ(x)≻`: evaluation is the matrix of
/// regularized basis values at `x`, form is `−γ⁰`.
pub fn local_correlation(x: FourVector, spec: &DiracBasisSpec) -> Result<OperatorPoint> {
    if !spec.is_orthonormal() {
        return Err(validation("the basis must be orthonormalized first"));
    }
    let cfg = vacuum_config(spec)?;
    let form = spec.algebra().spin_form() * real(-1.0);
    OperatorPoint::new(spec.evaluation_matrix(x), form, &cfg)
}

/// The push-forward measure: one support point `F(x_i)` with weight equal to
/// the cell volume per sample point. Coinciding operators are kept apart.
pub fn build_minkowski_cfs(
    sample: &SpacetimeSample,
    spec: &DiracBasisSpec,
) -> Result<DiscreteMeasure> {
    if sample.is_empty() {
        return Err(validation("the spacetime sample is empty"));
    }
    let points = sample
        .points()
        .par_iter()
        .map(|&x| local_correlation(x, spec))
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(vacuum_config(spec)?, points, sample.cell_volumes().to_vec())
}
