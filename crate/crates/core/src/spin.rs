//! Spin spaces with their indefinite inner product, physical wave functions,
//! the kernel of the fermionic projector, closed chains and local gauge
//! transformations.
//!
//! Spin-space vectors are handled in coordinates relative to a
//! pseudo-orthonormal frame. For a frame with basis matrix `B` (columns
//! `𝔢_α`) and signs `s`, the coordinates of `u ∈ S_x` are
//! `ψ = −S B† x u`, which follows from `≺𝔢_α|𝔢_β≻_x = s_α δ_αβ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{validation, CfsError, Result};
use crate::linalg::{self, c64, real, CMatrix, CVector, C64};
use crate::operators::{OperatorPoint, SystemConfig};

/// `≺u|v≻_x = −⟨u | x v⟩`.
pub fn spin_scalar_product(x: &OperatorPoint, u: &CVector, v: &CVector) -> C64 {
    -u.dotc(&x.apply(v))
}

/// A pseudo-orthonormal basis of the spin space `S_x = x(H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinFrame {
    point: OperatorPoint,
    basis: CMatrix,
    signs: Vec<f64>,
    signature: (usize, usize),
}

impl SpinFrame {
    pub fn point(&self) -> &OperatorPoint {
        &self.point
    }

    /// `f × (p + q)` matrix whose columns are the frame vectors.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// `s_α`: `+1` for the first `p` columns, `−1` for the rest.
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    fn sign_matrix(&self) -> CMatrix {
        linalg::diag_real(&self.signs)
    }

    /// Gram matrix `≺𝔢_α|𝔢_β≻_x`, equal to `diag(s)` for a valid frame.
    pub fn gram(&self) -> CMatrix {
        -(self.basis.adjoint() * self.point.apply_matrix(&self.basis))
    }

    /// Frame coordinates of `π_x m` for each column of `m`.
    pub fn coordinates(&self, m: &CMatrix) -> CMatrix {
        -(self.sign_matrix() * self.basis.adjoint() * self.point.apply_matrix(m))
    }

    /// The spin-space vector `Σ_α ψ^α 𝔢_α`.
    pub fn vector(&self, coordinates: &CVector) -> CVector {
        &self.basis * coordinates
    }
}

/// Frame of eigenvectors of `x`, each scaled by `1/√|ν|`.
///
/// Columns for negative eigenvalues (sign `+1`) come first, each group in
/// ascending eigenvalue order. The phase of every eigenvector is fixed by
/// making its largest-modulus component real and positive. For degenerate
/// eigenvalues the basis within an eigenspace is whatever the eigensolver
/// returns; frame-dependent outputs are then not unique.
pub fn build_spin_frame(x: &OperatorPoint, cfg: &SystemConfig) -> Result<SpinFrame> {
    let (values, vectors) = x.eigenpairs(cfg.tol_rank);
    if values.is_empty() {
        return Err(CfsError::DegeneratePoint(
            "the zero operator has an empty spin space".into(),
        ));
    }
    let f = x.hilbert_dim();
    let r = values.len();
    let mut basis = CMatrix::zeros(f, r);
    let mut signs = Vec::with_capacity(r);
    // eigenpairs are ascending, so negative eigenvalues already come first
    for (col, &nu) in values.iter().enumerate() {
        let v = vectors.column(col);
        let mut pivot = 0;
        for i in 1..f {
            if v[i].norm() > v[pivot].norm() {
                pivot = i;
            }
        }
        let phase = if v[pivot].norm() > 0.0 {
            v[pivot].conj() / v[pivot].norm()
        } else {
            real(1.0)
        };
        let scale = 1.0 / nu.abs().sqrt();
        for i in 0..f {
            basis[(i, col)] = v[i] * phase * scale;
        }
        signs.push(if nu < 0.0 { 1.0 } else { -1.0 });
    }
    let p = signs.iter().filter(|s| **s > 0.0).count();
    Ok(SpinFrame {
        point: x.clone(),
        basis,
        signs,
        signature: (p, r - p),
    })
}

/// Frame coordinates of the physical wave function `ψ^u(x) = π_x u`.
pub fn physical_wave_function(u: &CVector, frame: &SpinFrame) -> CVector {
    let m = CMatrix::from_column_slice(u.len(), 1, u.as_slice());
    frame.coordinates(&m).column(0).into_owned()
}

/// The kernel `P(x,y) = π_x y|_{S_y}` written in a pair of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: CMatrix,
    pub frames: (SpinFrame, SpinFrame),
}

/// JSON debugging view of a kernel matrix.
#[derive(Debug, Clone, Serialize)]
pub struct KernelMatrixJson {
    pub entries: Vec<Vec<[f64; 2]>>,
    pub row_signs: Vec<f64>,
    pub col_signs: Vec<f64>,
}

impl KernelMatrix {
    pub fn to_json_view(&self) -> KernelMatrixJson {
        KernelMatrixJson {
            entries: crate::io::matrix_to_rows(&self.entries),
            row_signs: self.frames.0.signs.clone(),
            col_signs: self.frames.1.signs.clone(),
        }
    }
}

pub fn kernel(fx: &SpinFrame, fy: &SpinFrame) -> KernelMatrix {
    let y_basis = fy.point.apply_matrix(&fy.basis);
    KernelMatrix {
        entries: fx.coordinates(&y_basis),
        frames: (fx.clone(), fy.clone()),
    }
}

/// Closed chain `A_xy = P(x,y) P(y,x)` on `S_x`, in the frame at `x`.
pub fn closed_chain(fx: &SpinFrame, fy: &SpinFrame) -> CMatrix {
    kernel(fx, fy).entries * kernel(fy, fx).entries
}

/// Eigenvalues of the closed chain, zero-padded to `2n` and in canonical order.
pub fn closed_chain_spectrum(fx: &SpinFrame, fy: &SpinFrame, cfg: &SystemConfig) -> Vec<C64> {
    let mut values = linalg::eigenvalues(&closed_chain(fx, fy));
    values.resize(cfg.rank_bound().max(values.len()), c64(0.0, 0.0));
    linalg::sort_spectrum(&mut values);
    values
}

/// `P(x,y) = −Σ_i |ψ^{e_i}(x)≻≺ψ^{e_i}(y)|` for an orthonormal basis `(e_i)`
/// of the Hilbert space, given as the columns of `basis`.
pub fn kernel_from_wave_functions(
    fx: &SpinFrame,
    fy: &SpinFrame,
    basis: &CMatrix,
) -> Result<KernelMatrix> {
    let f = fx.point.hilbert_dim();
    if basis.nrows() != f || basis.ncols() != f {
        return Err(validation(format!("basis must be {f}x{f}")));
    }
    if linalg::orthonormality_defect(basis) > 1e-10 {
        return Err(validation("basis of the Hilbert space is not orthonormal"));
    }
    let psi_x = fx.coordinates(basis);
    let psi_y = fy.coordinates(basis);
    // ≺ψ(y)|φ≻_y in coordinates is ψ(y)† S_y φ
    let entries = -(psi_x * psi_y.adjoint() * fy.sign_matrix());
    Ok(KernelMatrix {
        entries,
        frames: (fx.clone(), fy.clone()),
    })
}

/// `max |U† S U − S|` for `S = diag(signs)`.
pub fn pseudo_unitarity_defect(u: &CMatrix, signs: &[f64]) -> f64 {
    let s = linalg::diag_real(signs);
    linalg::max_abs(&(u.adjoint() * &s * u - &s))
}

/// Applies a local gauge transformation `𝔢'_β = Σ_α (U⁻¹)^α_β 𝔢_α`.
///
/// `U` must be unitary with respect to the frame's signature; its inverse is
/// then `S U† S`.
pub fn gauge_transform(frame: &SpinFrame, u: &CMatrix) -> Result<SpinFrame> {
    let r = frame.dim();
    if u.nrows() != r || u.ncols() != r {
        return Err(validation(format!("gauge matrix must be {r}x{r}")));
    }
    let tol = 1e-10 * linalg::max_abs(u).powi(2).max(1.0);
    if pseudo_unitarity_defect(u, &frame.signs) > tol {
        return Err(validation(
            "matrix is not pseudo-unitary for the frame signature",
        ));
    }
    let s = frame.sign_matrix();
    let inverse = &s * u.adjoint() * &s;
    Ok(SpinFrame {
        point: frame.point.clone(),
        basis: &frame.basis * inverse,
        signs: frame.signs.clone(),
        signature: frame.signature,
    })
}

/// A random element of `U(p, q)` for the form `diag(+1…, −1…)`.
///
/// Built as `V₁ · B · V₂` with `V₁, V₂ ∈ U(p) × U(q)` Haar-random and `B` a
/// product of hyperbolic boosts pairing each positive direction with a
/// negative one, rapidities uniform in `[−1, 1]`.
pub fn random_pseudo_unitary(p: usize, q: usize, seed: u64) -> Result<CMatrix> {
    if p + q == 0 {
        return Err(validation("signature must have p + q >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block_unitary = |rng: &mut ChaCha8Rng| {
        let mut m = CMatrix::zeros(p + q, p + q);
        if p > 0 {
            m.view_mut((0, 0), (p, p))
                .copy_from(&linalg::random_unitary(rng, p));
        }
        if q > 0 {
            m.view_mut((p, p), (q, q))
                .copy_from(&linalg::random_unitary(rng, q));
        }
        m
    };
    let v1 = block_unitary(&mut rng);
    let v2 = block_unitary(&mut rng);
    let mut boost = CMatrix::identity(p + q, p + q);
    for k in 0..p.min(q) {
        let rapidity: f64 = rng.gen_range(-1.0..=1.0);
        let (c, s) = (rapidity.cosh(), rapidity.sinh());
        let (a, b) = (k, p + k);
        boost[(a, a)] = real(c);
        boost[(b, b)] = real(c);
        boost[(a, b)] = real(s);
        boost[(b, a)] = real(s);
    }
    Ok(v1 * boost * v2)
}

/// Signs `diag(+1…, −1…)` of a `(p, q)` signature.
pub fn signature_signs(p: usize, q: usize) -> Vec<f64> {
    std::iter::repeat_n(1.0, p)
        .chain(std::iter::repeat_n(-1.0, q))
        .collect()
}
