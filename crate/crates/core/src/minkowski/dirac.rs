//! Dirac matrices and negative-frequency plane waves.
//!
//! Conventions: metric `(+,−,−,−)`, Dirac representation
//! `γ⁰ = diag(1, 1, −1, −1)`, `γʲ = [[0, σⱼ], [−σⱼ, 0]]`, and
//! `p̸ = γ⁰p⁰ − Σⱼ γʲpʲ` for a contravariant four-vector `p`.
//!
//! A negative-frequency plane wave `e^{+iωt + ip⃗·x⃗} χ` solves the Dirac
//! equation iff `(p̸ − m)χ = 0` with `p = (−ω, p⃗)`. The spinors are
//! `χ_a ∝ (p̸ + m) u_a` with `u_1 = e₃`, `u_2 = e₄`, normalized to
//! `χ†χ = 1`; the two are orthogonal.

use std::f64::consts::PI;

use crate::error::{validation, Result};
use crate::linalg::{c64, real, CMatrix, CVector, C64};

/// A point `(t, x, y, z)` or a contravariant four-momentum.
pub type FourVector = [f64; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct DiracAlgebra {
    gamma: [CMatrix; 4],
    mass: f64,
}

fn pauli(j: usize) -> [[C64; 2]; 2] {
    let (o, z, i) = (real(1.0), real(0.0), c64(0.0, 1.0));
    match j {
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        3 => [[o, z], [z, -o]],
        _ => unreachable!("pauli index is 1..=3"),
    }
}

impl DiracAlgebra {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(validation("mass must be finite and positive"));
        }
        let mut gamma: [CMatrix; 4] = std::array::from_fn(|_| CMatrix::zeros(4, 4));
        for k in 0..4 {
            gamma[0][(k, k)] = real(if k < 2 { 1.0 } else { -1.0 });
        }
        for j in 1..4 {
            let s = pauli(j);
            for a in 0..2 {
                for b in 0..2 {
                    gamma[j][(a, 2 + b)] = s[a][b];
                    gamma[j][(2 + a, b)] = -s[a][b];
                }
            }
        }
        Ok(DiracAlgebra { gamma, mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gamma(&self, k: usize) -> &CMatrix {
        &self.gamma[k]
    }

    /// The spin scalar product `≺ψ|φ≻ = ψ† γ⁰ φ` has this matrix.
    pub fn spin_form(&self) -> &CMatrix {
        &self.gamma[0]
    }

    pub fn slash(&self, p: FourVector) -> CMatrix {
        let mut m = &self.gamma[0] * real(p[0]);
        for j in 1..4 {
            m -= &self.gamma[j] * real(p[j]);
        }
        m
    }

    /// `max |{γʲ, γᵏ} − 2gʲᵏ|` over all index pairs.
    pub fn anticommutator_residual(&self) -> f64 {
        let metric = [1.0, -1.0, -1.0, -1.0];
        let mut worst = 0.0_f64;
        for j in 0..4 {
            for k in j..4 {
                let mut ac = &self.gamma[j] * &self.gamma[k] + &self.gamma[k] * &self.gamma[j];
                if j == k {
                    ac -= CMatrix::identity(4, 4) * real(2.0 * metric[j]);
                }
                worst = worst.max(crate::linalg::max_abs(&ac));
            }
        }
        worst
    }

    /// Deviation of `γ⁰` from hermiticity and of `γʲ` from anti-hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = crate::linalg::hermiticity_defect(&self.gamma[0]);
        for j in 1..4 {
            worst = worst.max(crate::linalg::max_abs(
                &(&self.gamma[j] + self.gamma[j].adjoint()),
            ));
        }
        worst
    }

    /// Normalized negative-frequency spinor for spin index `a ∈ {1, 2}`.
    pub fn negative_frequency_spinor(&self, p_vec: [f64; 3], a: u8) -> Result<CVector> {
        if a != 1 && a != 2 {
            return Err(validation(format!("spin index must be 1 or 2, got {a}")));
        }
        let omega = omega(p_vec, self.mass);
        let p = [-omega, p_vec[0], p_vec[1], p_vec[2]];
        let projector = self.slash(p) + CMatrix::identity(4, 4) * real(self.mass);
        let chi = projector.column(1 + a as usize).into_owned();
        Ok(&chi / real(chi.norm()))
    }

    /// `|(p̸ − m)χ|` for the negative-frequency momentum of `p_vec`.
    pub fn dirac_residual(&self, p_vec: [f64; 3], chi: &CVector) -> f64 {
        let p = [-omega(p_vec, self.mass), p_vec[0], p_vec[1], p_vec[2]];
        ((self.slash(p) - CMatrix::identity(4, 4) * real(self.mass)) * chi).norm()
    }
}

pub fn omega(p_vec: [f64; 3], mass: f64) -> f64 {
    (p_vec.iter().map(|p| p * p).sum::<f64>() + mass * mass).sqrt()
}

/// One plane wave of the momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumMode {
    pub p_vec: [f64; 3],
    /// Spin index `a ∈ {1, 2}`.
    pub spin: u8,
    pub omega: f64,
    /// Momentum-space volume of the quadrature cell.
    pub quad_weight: f64,
    pub spinor: CVector,
}

impl MomentumMode {
    pub fn new(
        algebra: &DiracAlgebra,
        p_vec: [f64; 3],
        spin: u8,
        quad_weight: f64,
    ) -> Result<Self> {
        if !(quad_weight.is_finite() && quad_weight > 0.0) || p_vec.iter().any(|p| !p.is_finite()) {
            return Err(validation(
                "mode needs a finite momentum and a positive quadrature weight",
            ));
        }
        Ok(MomentumMode {
            p_vec,
            spin,
            omega: omega(p_vec, algebra.mass()),
            quad_weight,
            spinor: algebra.negative_frequency_spinor(p_vec, spin)?,
        })
    }

    /// The phase `e^{+iωt + ip⃗·x⃗}`.
    pub fn phase(&self, x: FourVector) -> C64 {
        let arg =
            self.omega * x[0] + self.p_vec[0] * x[1] + self.p_vec[1] * x[2] + self.p_vec[2] * x[3];
        C64::from_polar(1.0, arg)
    }
}

/// `(2π)^{−3/2} e^{+iωt + ip⃗·x⃗} χ`.
pub fn plane_wave_eval(mode: &MomentumMode, x: FourVector) -> CVector {
    &mode.spinor * (mode.phase(x) * (2.0 * PI).powf(-1.5))
}
