//! Numerical toolkit for finite-dimensional causal fermion systems.
//!
//! Points of `F` are stored in factored form `x = E† A E`, so rank and
//! signature bounds hold by construction. On top of that the crate evaluates
//! the causal action and its constraints, classifies causal relations,
//! checks the spin-geometric identities, minimizes the action over discrete
//! measures and builds the regularized Minkowski vacuum from Dirac waves.

pub mod action;
pub mod error;
pub mod identities;
pub mod io;
pub mod linalg;
pub mod minimize;
pub mod minkowski;
pub mod operators;
pub mod seed;
pub mod spin;

pub use action::{
    action, boundedness_integrand, classify, constraint_report, lagrangian, push_forward,
    CausalKind, CausalRelation, ConstraintReport, DiscreteMeasure,
};
pub use error::{CfsError, Result};
pub use operators::{
    make_point_from_spectral, point_spectrum, product_spectrum, OperatorPoint, PointSpectrum,
    ProductSpectrum, SystemConfig,
};
pub use spin::{
    build_spin_frame, closed_chain, gauge_transform, kernel, kernel_from_wave_functions,
    physical_wave_function, random_pseudo_unitary, spin_scalar_product, KernelMatrix, SpinFrame,
};
