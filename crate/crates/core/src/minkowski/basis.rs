//! Finite families of regularized negative-frequency wave packets.
//!
//! Basis vector `j` is the packet `Σ_k w_k C_kj ψ_k` over the momentum modes
//! `k`, where `w_k` is the quadrature weight and `C` the coefficient matrix
//! (modes × basis vectors). On `t = const` the scalar product of two plane
//! waves is `2π δ³(p − q) χ†χ`, so on the grid only modes with identical
//! momentum overlap.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dirac::{plane_wave_eval, DiracAlgebra, FourVector, MomentumMode};
use crate::error::{validation, CfsError, Result};
use crate::linalg::{self, real, CMatrix, CVector};

/// Uniform Cartesian momentum grid with midpoint cells, pruned to a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumGrid {
    /// Ball radius in units of the mass.
    #[serde(default = "MomentumGrid::default_p_max")]
    pub p_max: f64,
    #[serde(default = "MomentumGrid::default_cells")]
    pub cells_per_axis: usize,
}

impl Default for MomentumGrid {
    fn default() -> Self {
        MomentumGrid {
            p_max: Self::default_p_max(),
            cells_per_axis: Self::default_cells(),
        }
    }
}

impl MomentumGrid {
    fn default_p_max() -> f64 {
        6.0
    }

    fn default_cells() -> usize {
        5
    }

    /// Cell midpoints inside the ball `|p| ≤ p_max·m`, ordered by modulus and
    /// then lexicographically.
    pub fn momenta(&self, mass: f64) -> Result<(Vec<[f64; 3]>, f64)> {
        if !(self.p_max.is_finite() && self.p_max > 0.0) || self.cells_per_axis == 0 {
            return Err(validation(
                "momentum grid needs p_max > 0 and at least one cell per axis",
            ));
        }
        let radius = self.p_max * mass;
        let h = 2.0 * radius / self.cells_per_axis as f64;
        let mid = |i: usize| -radius + h * (i as f64 + 0.5);
        let mut out = Vec::new();
        for i in 0..self.cells_per_axis {
            for j in 0..self.cells_per_axis {
                for k in 0..self.cells_per_axis {
                    let p = [mid(i), mid(j), mid(k)];
                    if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius * (1.0 + 1e-12) {
                        out.push(p);
                    }
                }
            }
        }
        let norm = |p: &[f64; 3]| p.iter().map(|v| v * v).sum::<f64>();
        out.sort_by(|a, b| {
            norm(a)
                .total_cmp(&norm(b))
                .then(a.partial_cmp(b).expect("finite momenta"))
        });
        Ok((out, h * h * h))
    }

    /// The first `count` (momentum, spin) modes, both spins of a momentum
    /// adjacent.
    pub fn modes(&self, algebra: &DiracAlgebra, count: usize) -> Result<Vec<MomentumMode>> {
        let (momenta, weight) = self.momenta(algebra.mass())?;
        if count > 2 * momenta.len() {
            return Err(validation(format!(
                "requested {count} modes but the grid holds only {}",
                2 * momenta.len()
            )));
        }
        momenta
            .iter()
            .flat_map(|p| [(*p, 1u8), (*p, 2u8)])
            .take(count)
            .map(|(p, a)| MomentumMode::new(algebra, p, a, weight))
            .collect()
    }
}

/// Isotropic Gaussian profile `exp(−|p − center|²/(2 width²))` for one spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPacket {
    pub center: [f64; 3],
    pub width: f64,
    pub spin: u8,
}

impl GaussianPacket {
    pub fn profile(&self, mode: &MomentumMode) -> f64 {
        if mode.spin != self.spin {
            return 0.0;
        }
        let d2: f64 = mode
            .p_vec
            .iter()
            .zip(&self.center)
            .map(|(p, c)| (p - c).powi(2))
            .sum();
        (-d2 / (2.0 * self.width * self.width)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracBasisSpec {
    algebra: DiracAlgebra,
    modes: Vec<MomentumMode>,
    coefficients: CMatrix,
    epsilon: f64,
    gram_defect: f64,
}

/// Gram matrices whose condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

impl DiracBasisSpec {
    /// General constructor from a coefficient matrix (modes × basis vectors).
    pub fn new(
        algebra: DiracAlgebra,
        modes: Vec<MomentumMode>,
        coefficients: CMatrix,
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(validation("epsilon must be finite and non-negative"));
        }
        if coefficients.nrows() != modes.len() {
            return Err(validation(format!(
                "coefficient matrix has {} rows for {} modes",
                coefficients.nrows(),
                modes.len()
            )));
        }
        let mut spec = DiracBasisSpec {
            algebra,
            modes,
            coefficients,
            epsilon,
            gram_defect: f64::INFINITY,
        };
        spec.gram_defect =
            linalg::max_abs(&(spec.gram() - CMatrix::identity(spec.dim(), spec.dim())));
        Ok(spec)
    }

    /// One basis vector per mode.
    pub fn per_mode(algebra: DiracAlgebra, modes: Vec<MomentumMode>, epsilon: f64) -> Result<Self> {
        let n = modes.len();
        Self::new(algebra, modes, CMatrix::identity(n, n), epsilon)
    }

    /// One basis vector per Gaussian packet sampled on the modes.
    pub fn gaussian(
        algebra: DiracAlgebra,
        modes: Vec<MomentumMode>,
        packets: &[GaussianPacket],
        epsilon: f64,
    ) -> Result<Self> {
        if packets
            .iter()
            .any(|g| !(g.width.is_finite() && g.width > 0.0))
        {
            return Err(validation("packet widths must be positive"));
        }
        let c = CMatrix::from_fn(modes.len(), packets.len(), |k, j| {
            real(packets[j].profile(&modes[k]))
        });
        Self::new(algebra, modes, c, epsilon)
    }

    pub fn algebra(&self) -> &DiracAlgebra {
        &self.algebra
    }

    pub fn modes(&self) -> &[MomentumMode] {
        &self.modes
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of basis vectors, the dimension of the Hilbert space.
    pub fn dim(&self) -> usize {
        self.coefficients.ncols()
    }

    /// The same basis with another regularization scale.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(validation("epsilon must be finite and non-negative"));
        }
        Ok(DiracBasisSpec {
            epsilon,
            ..self.clone()
        })
    }

    pub fn is_orthonormal(&self) -> bool {
        self.gram_defect <= 1e-10
    }

    /// `G_ij = 2π Σ_{k,l: p_k = p_l} w_k conj(C_ki) C_lj χ_k†χ_l`.
    pub fn gram(&self) -> CMatrix {
        let mut groups: BTreeMap<[u64; 3], Vec<usize>> = BTreeMap::new();
        for (k, m) in self.modes.iter().enumerate() {
            groups.entry(m.p_vec.map(f64::to_bits)).or_default().push(k);
        }
        let f = self.dim();
        let mut g = CMatrix::zeros(f, f);
        for members in groups.values() {
            for &k in members {
                for &l in members {
                    let overlap = self.modes[k].spinor.dotc(&self.modes[l].spinor)
                        * self.modes[k].quad_weight;
                    if overlap.norm() == 0.0 {
                        continue;
                    }
                    let rk = self.coefficients.row(k).adjoint();
                    let rl = self.coefficients.row(l);
                    g += (rk * rl) * overlap;
                }
            }
        }
        g * real(2.0 * PI)
    }

    /// Recombines the basis so its Gram matrix is the identity (Cholesky,
    /// `C ← C L^{−†}`).
    pub fn orthonormalize(&self) -> Result<Self> {
        let g = self.gram();
        let (values, _) = linalg::hermitian_eigen(&g);
        let max = values.last().copied().unwrap_or(0.0);
        let min = values.first().copied().unwrap_or(0.0);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(CfsError::IllConditioned { condition });
        }
        let chol = nalgebra::Cholesky::new(g).ok_or(CfsError::IllConditioned { condition })?;
        let l_inv_adj = chol
            .l()
            .solve_lower_triangular(&CMatrix::identity(self.dim(), self.dim()))
            .ok_or(CfsError::IllConditioned { condition })?
            .adjoint();
        Self::new(
            self.algebra.clone(),
            self.modes.clone(),
            &self.coefficients * l_inv_adj,
            self.epsilon,
        )
    }

    /// Per-mode factors `w_k e^{−εω_k}`.
    fn damping(&self) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| m.quad_weight * (-self.epsilon * m.omega).exp())
            .collect()
    }

    /// The 4 × f matrix whose columns are the regularized basis vectors at `x`.
    pub fn evaluation_matrix(&self, x: FourVector) -> CMatrix {
        let damping = self.damping();
        let mut waves = CMatrix::zeros(4, self.modes.len());
        for (k, m) in self.modes.iter().enumerate() {
            waves.set_column(k, &(plane_wave_eval(m, x) * real(damping[k])));
        }
        waves * &self.coefficients
    }

    /// `(Rψ_k)(x)` for basis vector `k`.
    pub fn regularized_eval(&self, k: usize, x: FourVector) -> CVector {
        let damping = self.damping();
        let mut out = CVector::zeros(4);
        for (j, m) in self.modes.iter().enumerate() {
            let c = self.coefficients[(j, k)];
            if c.norm() != 0.0 {
                out += plane_wave_eval(m, x) * (c * damping[j]);
            }
        }
        out
    }
}
