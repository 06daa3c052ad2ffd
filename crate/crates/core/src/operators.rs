//! Points of the operator set in factored form and spectra of operator products.
//!
//! A point `x` is stored as `evaluation† · form · evaluation`, where
//! `evaluation` is `2n × f` and `form` is a `2n × 2n` Hermitian matrix with
//! at most `n` positive and `n` negative eigenvalues. By Sylvester's law the
//! represented operator then has rank at most `2n` and inherits the sign
//! bound, so membership in the operator set never needs a projection step.

use nalgebra::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, CfsError, Result};
use crate::linalg::{
    self, diag_real, factored_eigen, hermitian_eigen, hermiticity_defect, max_abs, CMatrix,
    CVector, C64,
};

/// Dimensions and numerical tolerances shared by every point of a system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Dimension `f` of the Hilbert space.
    pub hilbert_dim: usize,
    /// Spin dimension `n`.
    pub spin_dim: usize,
    /// Relative threshold below which an eigenvalue counts as zero.
    #[serde(default = "SystemConfig::default_tol_rank")]
    pub tol_rank: f64,
    /// Relative tolerance for spectral equality tests.
    #[serde(default = "SystemConfig::default_tol_eq")]
    pub tol_eq: f64,
}

impl SystemConfig {
    pub const DEFAULT_TOL_RANK: f64 = 1e-10;
    pub const DEFAULT_TOL_EQ: f64 = 1e-8;

    fn default_tol_rank() -> f64 {
        Self::DEFAULT_TOL_RANK
    }

    fn default_tol_eq() -> f64 {
        Self::DEFAULT_TOL_EQ
    }

    pub fn new(hilbert_dim: usize, spin_dim: usize) -> Result<Self> {
        Self::with_tolerances(
            hilbert_dim,
            spin_dim,
            Self::DEFAULT_TOL_RANK,
            Self::DEFAULT_TOL_EQ,
        )
    }

    pub fn with_tolerances(
        hilbert_dim: usize,
        spin_dim: usize,
        tol_rank: f64,
        tol_eq: f64,
    ) -> Result<Self> {
        let cfg = Self {
            hilbert_dim,
            spin_dim,
            tol_rank,
            tol_eq,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spin_dim == 0 {
            return Err(validation("spin dimension must be positive"));
        }
        if self.hilbert_dim < 2 * self.spin_dim {
            return Err(validation(format!(
                "hilbert_dim {} < 2 * spin_dim {}: no regular points exist",
                self.hilbert_dim, self.spin_dim
            )));
        }
        for (name, tol) in [("tol_rank", self.tol_rank), ("tol_eq", self.tol_eq)] {
            if !(0.0..=1e-2).contains(&tol) {
                return Err(validation(format!("{name} = {tol} outside [0, 1e-2]")));
            }
        }
        Ok(())
    }

    /// Maximal rank `2n` of a point.
    pub fn rank_bound(&self) -> usize {
        2 * self.spin_dim
    }
}

/// A self-adjoint finite-rank operator with at most `n` positive and `n`
/// negative eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPoint {
    evaluation: CMatrix,
    form: CMatrix,
}

/// Counts of positive and negative eigenvalues above a relative threshold.
pub(crate) fn inertia(values: &[f64], tol_rank: f64) -> (usize, usize) {
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cut = tol_rank * scale;
    let pos = values.iter().filter(|&&v| v > cut && v > 0.0).count();
    let neg = values.iter().filter(|&&v| v < -cut && v < 0.0).count();
    (pos, neg)
}

impl OperatorPoint {
    /// Builds a point from its factors, checking shapes, hermiticity of the
    /// form and the sign bound.
    pub fn new(evaluation: CMatrix, form: CMatrix, cfg: &SystemConfig) -> Result<Self> {
        let r = cfg.rank_bound();
        if evaluation.nrows() != r || evaluation.ncols() != cfg.hilbert_dim {
            return Err(validation(format!(
                "evaluation must be {r}x{}, got {}x{}",
                cfg.hilbert_dim,
                evaluation.nrows(),
                evaluation.ncols()
            )));
        }
        if form.nrows() != r || form.ncols() != r {
            return Err(validation(format!(
                "form must be {r}x{r}, got {}x{}",
                form.nrows(),
                form.ncols()
            )));
        }
        if evaluation
            .iter()
            .chain(form.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(validation("non-finite matrix entry"));
        }
        let scale = max_abs(&form);
        if hermiticity_defect(&form) > 1e-12 * scale {
            return Err(validation("form is not Hermitian"));
        }
        let (values, _) = hermitian_eigen(&form);
        let (pos, neg) = inertia(&values, cfg.tol_rank);
        if pos > cfg.spin_dim || neg > cfg.spin_dim {
            return Err(CfsError::Constraint(format!(
                "form has inertia ({pos}, {neg}), exceeding spin dimension {}",
                cfg.spin_dim
            )));
        }
        Ok(Self { evaluation, form })
    }

    /// The zero operator.
    pub fn zero(cfg: &SystemConfig) -> Self {
        let r = cfg.rank_bound();
        Self {
            evaluation: CMatrix::zeros(r, cfg.hilbert_dim),
            form: CMatrix::zeros(r, r),
        }
    }

    /// Skips validation; callers guarantee the invariants (e.g. a congruence
    /// of a valid point).
    pub(crate) fn from_parts_unchecked(evaluation: CMatrix, form: CMatrix) -> Self {
        Self { evaluation, form }
    }

    pub fn evaluation(&self) -> &CMatrix {
        &self.evaluation
    }

    pub fn form(&self) -> &CMatrix {
        &self.form
    }

    pub fn hilbert_dim(&self) -> usize {
        self.evaluation.ncols()
    }

    /// Dense `f × f` matrix `evaluation† · form · evaluation`.
    pub fn dense(&self) -> CMatrix {
        let d = self.evaluation.adjoint() * &self.form * &self.evaluation;
        (&d + d.adjoint()) * linalg::real(0.5)
    }

    /// `x · v` without forming the dense matrix.
    pub fn apply(&self, v: &CVector) -> CVector {
        self.evaluation.adjoint() * (&self.form * (&self.evaluation * v))
    }

    /// `x · m` column by column.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        self.evaluation.adjoint() * (&self.form * (&self.evaluation * m))
    }

    /// `tr(x)`, real for self-adjoint `x`.
    pub fn trace(&self) -> f64 {
        (&self.form * (&self.evaluation * self.evaluation.adjoint()))
            .trace()
            .re
    }

    /// Multiplies the operator by a real scalar; a negative factor swaps the
    /// roles of positive and negative eigenvalues and stays admissible.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            evaluation: self.evaluation.clone(),
            form: &self.form * linalg::real(factor),
        }
    }

    /// `U x U†` for a unitary `U` on the Hilbert space.
    pub fn conjugated(&self, unitary: &CMatrix) -> Self {
        Self {
            evaluation: &self.evaluation * unitary.adjoint(),
            form: self.form.clone(),
        }
    }

    /// Nonzero eigenpairs of the operator: eigenvalues ascending with
    /// orthonormal eigenvectors as columns. Eigenvalues at or below
    /// `tol_rank` relative to the largest modulus are dropped.
    pub fn eigenpairs(&self, tol_rank: f64) -> (Vec<f64>, CMatrix) {
        let (values, vectors) = factored_eigen(&self.evaluation, &self.form);
        let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            return (Vec::new(), CMatrix::zeros(self.hilbert_dim(), 0));
        }
        let keep: Vec<usize> = (0..values.len())
            .filter(|&k| values[k].abs() > tol_rank * scale)
            .collect();
        let vals = keep.iter().map(|&k| values[k]).collect();
        let vecs = CMatrix::from_fn(self.hilbert_dim(), keep.len(), |i, j| vectors[(i, keep[j])]);
        (vals, vecs)
    }

    /// Spectral norm `‖x‖`.
    pub fn operator_norm(&self) -> f64 {
        let (values, _) = factored_eigen(&self.evaluation, &self.form);
        values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Operator-norm distance `‖x − y‖`, computed in factored form.
    pub fn distance(&self, other: &Self) -> f64 {
        let r1 = self.evaluation.nrows();
        let r2 = other.evaluation.nrows();
        let f = self.hilbert_dim();
        let mut stacked = CMatrix::zeros(r1 + r2, f);
        stacked.rows_mut(0, r1).copy_from(&self.evaluation);
        stacked.rows_mut(r1, r2).copy_from(&other.evaluation);
        let mut form = CMatrix::zeros(r1 + r2, r1 + r2);
        form.view_mut((0, 0), (r1, r1)).copy_from(&self.form);
        form.view_mut((r1, r1), (r2, r2)).copy_from(&(-&other.form));
        let (values, _) = factored_eigen(&stacked, &form);
        values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// A random admissible point of full rank `2n`: Gaussian evaluation and
    /// the form `diag(1,…,1,−1,…,−1)` with positive diagonal scale factors.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cfg: &SystemConfig) -> Self {
        let n = cfg.spin_dim;
        let evaluation = linalg::gaussian_matrix(rng, 2 * n, cfg.hilbert_dim);
        let diag: Vec<f64> = (0..2 * n)
            .map(|k| {
                let mag = 0.5 + rng.gen::<f64>();
                if k < n {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        Self {
            evaluation,
            form: diag_real(&diag),
        }
    }
}

/// Builds the point `Σ_j eigenvalues[j] · v_j v_j†` from orthonormal columns.
pub fn make_point_from_spectral(
    vectors: &CMatrix,
    eigenvalues: &[f64],
    cfg: &SystemConfig,
) -> Result<OperatorPoint> {
    let k = eigenvalues.len();
    if vectors.ncols() != k || vectors.nrows() != cfg.hilbert_dim {
        return Err(validation(format!(
            "expected {}x{k} vectors, got {}x{}",
            cfg.hilbert_dim,
            vectors.nrows(),
            vectors.ncols()
        )));
    }
    if k > cfg.rank_bound() {
        return Err(CfsError::Constraint(format!(
            "{k} eigenvalues exceed rank bound {}",
            cfg.rank_bound()
        )));
    }
    if eigenvalues.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(validation("eigenvalues must be finite and nonzero"));
    }
    let pos = eigenvalues.iter().filter(|v| **v > 0.0).count();
    let neg = k - pos;
    if pos > cfg.spin_dim || neg > cfg.spin_dim {
        return Err(CfsError::Constraint(format!(
            "{pos} positive / {neg} negative eigenvalues exceed spin dimension {}",
            cfg.spin_dim
        )));
    }
    if linalg::orthonormality_defect(vectors) > 1e-10 {
        return Err(validation("columns are not orthonormal"));
    }
    let r = cfg.rank_bound();
    let mut evaluation = CMatrix::zeros(r, cfg.hilbert_dim);
    evaluation.rows_mut(0, k).copy_from(&vectors.adjoint());
    let mut diag = eigenvalues.to_vec();
    diag.resize(r, 0.0);
    Ok(OperatorPoint {
        evaluation,
        form: diag_real(&diag),
    })
}

/// The `2n` nontrivial eigenvalues of an operator product, zero-padded, in
/// canonical order (modulus, real part, imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpectrum {
    pub values: Vec<C64>,
}

impl ProductSpectrum {
    pub fn from_values(mut values: Vec<C64>) -> Self {
        linalg::sort_spectrum(&mut values);
        Self { values }
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0, |acc: f64, z| acc.max(z.norm()))
    }

    /// Entries whose modulus is nonzero.
    pub fn nonzero(&self) -> Vec<C64> {
        self.values
            .iter()
            .copied()
            .filter(|z| z.norm() > 0.0)
            .collect()
    }
}

/// Cross-Gram matrix `evaluation_x · evaluation_y†`.
fn cross_gram(x: &OperatorPoint, y: &OperatorPoint) -> CMatrix {
    &x.evaluation * y.evaluation.adjoint()
}

/// Nontrivial eigenvalues of `x·y` from the `2n × 2n` matrix
/// `form_x · G_xy · form_y · G_yx`, which shares its nonzero spectrum with
/// the dense product by cyclic permutation.
pub fn product_spectrum(
    x: &OperatorPoint,
    y: &OperatorPoint,
    cfg: &SystemConfig,
) -> Result<ProductSpectrum> {
    for p in [x, y] {
        if p.evaluation.ncols() != cfg.hilbert_dim || p.evaluation.nrows() != cfg.rank_bound() {
            return Err(validation(
                "point dimensions do not match the system configuration",
            ));
        }
    }
    Ok(product_spectrum_unchecked(x, y, cfg.tol_rank))
}

pub(crate) fn product_spectrum_unchecked(
    x: &OperatorPoint,
    y: &OperatorPoint,
    tol_rank: f64,
) -> ProductSpectrum {
    let g_xy = cross_gram(x, y);
    let m = &x.form * &g_xy * &y.form * g_xy.adjoint();
    let mut values = linalg::eigenvalues(&m);
    // |λ| ≤ ‖x‖‖y‖ ≤ ‖form_x‖‖E_x‖²‖form_y‖‖E_y‖² bounds the spectrum; entries
    // below tol_rank of that bound are rounding noise and become exact zeros.
    let bound =
        x.form.norm() * x.evaluation.norm_squared() * y.form.norm() * y.evaluation.norm_squared();
    let cut = tol_rank * bound;
    for z in values.iter_mut() {
        if z.norm() <= cut {
            *z = Complex::new(0.0, 0.0);
        }
    }
    ProductSpectrum::from_values(values)
}

/// Nonzero spectrum of a single point with its spin-space signature.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSpectrum {
    /// Positive eigenvalues, ascending.
    pub positive: Vec<f64>,
    /// Negative eigenvalues, ascending.
    pub negative: Vec<f64>,
    /// `(p_x, q_x)`: `p_x` counts negative eigenvalues of `x`, `q_x` positive
    /// ones, since the spin scalar product is `−⟨u|x v⟩`.
    pub signature: (usize, usize),
}

pub fn point_spectrum(x: &OperatorPoint, cfg: &SystemConfig) -> PointSpectrum {
    let (values, _) = x.eigenpairs(cfg.tol_rank);
    let positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    let negative: Vec<f64> = values.iter().copied().filter(|v| *v < 0.0).collect();
    let signature = (negative.len(), positive.len());
    PointSpectrum {
        positive,
        negative,
        signature,
    }
}
