//! Small dense complex linear algebra helpers on top of nalgebra.

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |m - m†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v)),
    ))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized first, so tiny anti-Hermitian noise is ignored.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * real(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Eigenvalues of a general complex square matrix (complex Schur form).
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if m.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return vec![C64::new(0.0, 0.0); n];
    }
    let (_, t) = m.clone().schur().unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Canonical ordering of spectra: modulus, then real part, then imaginary part.
pub fn spectral_order(a: &C64, b: &C64) -> Ordering {
    a.norm()
        .total_cmp(&b.norm())
        .then(a.re.total_cmp(&b.re))
        .then(a.im.total_cmp(&b.im))
}

pub fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(spectral_order);
}

/// Largest pairwise distance between two multisets of equal size.
///
/// Both lists are put in canonical order; each entry of `a` is then paired
/// with the nearest still-unpaired entry of `b`. Returns `f64::INFINITY` on a
/// length mismatch.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_spectrum(&mut a);
    sort_spectrum(&mut b);
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for za in &a {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (k, zb) in b.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (za - zb).norm();
            if d < best_d {
                best_d = d;
                best = Some(k);
            }
        }
        if let Some(k) = best {
            used[k] = true;
        }
        worst = worst.max(best_d);
    }
    worst
}

/// Thin QR of a tall matrix: `m = q r` with `q` having orthonormal columns.
pub fn thin_qr(m: &CMatrix) -> (CMatrix, CMatrix) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Eigenpairs of the Hermitian operator `factor† · form · factor` without
/// forming the dense matrix.
///
/// Returns `min(rows, cols)` eigenvalues of `factor`'s shape (ascending),
/// with orthonormal eigenvectors spanning a subspace that contains the range
/// of the operator. The remaining eigenvalues of the dense operator are zero.
pub fn factored_eigen(factor: &CMatrix, form: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (q, r) = thin_qr(&factor.adjoint());
    let compressed = &r * form * r.adjoint();
    let (values, w) = hermitian_eigen(&compressed);
    (values, q * w)
}

/// Complex Gaussian matrix with independent standard normal real and imaginary parts.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with phase fixing.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let (mut q, r) = thin_qr(&g);
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            real(1.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0, |acc: f64, &s| acc.max(s))
}

/// `max |q† q - 1|` over entries.
pub fn orthonormality_defect(q: &CMatrix) -> f64 {
    let g = q.adjoint() * q;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - real(target)).norm());
        }
    }
    worst
}

/// Neumaier-compensated summation in insertion order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hermitian_eigen_is_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = gaussian_matrix(&mut rng, 5, 5);
        let h = &g + g.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let rebuilt = &vecs * diag_real(&vals) * vecs.adjoint();
        assert!(max_abs(&(rebuilt - h)) < 1e-12);
    }

    #[test]
    fn factored_eigen_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = gaussian_matrix(&mut rng, 3, 7);
        let form = diag_real(&[2.0, -1.0, 0.5]);
        let dense = e.adjoint() * &form * &e;
        let (vals, vecs) = factored_eigen(&e, &form);
        let (dense_vals, _) = hermitian_eigen(&dense);
        // the dense spectrum is the factored one plus zeros
        let mut nonzero: Vec<f64> = dense_vals.into_iter().filter(|v| v.abs() > 1e-9).collect();
        nonzero.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&nonzero) {
            assert!((a - b).abs() < 1e-10);
        }
        let rebuilt = &vecs * diag_real(&vals) * vecs.adjoint();
        assert!(max_abs(&(rebuilt - dense)) < 1e-10);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(&mut rng, 6);
        assert!(orthonormality_defect(&u) < 1e-12);
    }

    #[test]
    fn multiset_distance_pairs_conjugates() {
        let a = [c64(1.0, 2.0), c64(1.0, -2.0), c64(0.5, 0.0)];
        let b = [c64(0.5, 0.0), c64(1.0, -2.0 + 1e-14), c64(1.0, 2.0)];
        assert!(multiset_distance(&a, &b) < 1e-13);
        assert!(multiset_distance(&a, &b[..2]).is_infinite());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
