//! Brute-force reference computations for the test suites.
//!
//! Nothing here calls into `cfs-core`. The oracles work on dense matrices or
//! on closed-form parameterizations so that agreement with the library is
//! evidence rather than a tautology.

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;
pub type Dense = DMatrix<C64>;

/// All eigenvalues of a dense square matrix.
pub fn dense_eigenvalues(m: &Dense) -> Vec<C64> {
    if m.iter().all(|z| z.norm() == 0.0) {
        return vec![C64::new(0.0, 0.0); m.nrows()];
    }
    let (_, t) = m.clone().schur().unpack();
    t.diagonal().iter().copied().collect()
}

/// The `k` eigenvalues of `x·y` of largest modulus, computed on the full
/// `f × f` product. For rank-`2n` factors these are the nontrivial ones.
pub fn dense_product_spectrum(x: &Dense, y: &Dense, k: usize) -> Vec<C64> {
    let mut values = dense_eigenvalues(&(x * y));
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    values.truncate(k);
    values.resize(k, C64::new(0.0, 0.0));
    values
}

/// Eigenvalues whose modulus exceeds `rel` times the largest modulus.
pub fn nonzero(values: &[C64], rel: f64) -> Vec<C64> {
    let scale = values.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    values
        .iter()
        .copied()
        .filter(|z| z.norm() > rel * scale)
        .collect()
}

/// Smallest achievable maximum pairing error between two multisets, found
/// by trying every permutation. Infinite when the lengths differ.
pub fn best_matching_error(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    assert!(a.len() <= 8, "exhaustive matching is limited to 8 entries");
    let mut perm: Vec<usize> = (0..b.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let err = a
            .iter()
            .zip(p)
            .fold(0.0_f64, |acc, (z, &j)| acc.max((z - b[j]).norm()));
        best = best.min(err);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Lagrangian `(1/4n) Σ_{ij} (|λ_i| − |λ_j|)²` by the literal double loop.
pub fn lagrangian(spectrum: &[C64], n: usize) -> f64 {
    let mut sum = 0.0;
    for a in spectrum {
        for b in spectrum {
            sum += (a.norm() - b.norm()).powi(2);
        }
    }
    sum / (4.0 * n as f64)
}

pub fn boundedness(spectrum: &[C64]) -> f64 {
    spectrum.iter().map(|z| z.norm()).sum::<f64>().powi(2)
}

/// The four constraint functionals of a weighted family of dense points,
/// as `(volume, trace, boundedness, action)`.
pub fn brute_force_report(points: &[Dense], weights: &[f64], n: usize) -> (f64, f64, f64, f64) {
    let mut action = 0.0;
    let mut bound = 0.0;
    for (x, cx) in points.iter().zip(weights) {
        for (y, cy) in points.iter().zip(weights) {
            let s = dense_product_spectrum(x, y, 2 * n);
            action += cx * cy * lagrangian(&s, n);
            bound += cx * cy * boundedness(&s);
        }
    }
    let volume = weights.iter().sum();
    let trace = points
        .iter()
        .zip(weights)
        .map(|(x, c)| c * x.trace().re)
        .sum();
    (volume, trace, bound, action)
}

/// Result of the exhaustive search over the two-point family with `f = 2`,
/// `n = 1`.
#[derive(Debug, Clone, Copy)]
pub struct GridOptimum {
    pub action: f64,
    pub boundedness: f64,
    /// `(c1, τ1, σ1, σ2, θ)` of the best cell.
    pub params: [f64; 5],
    pub cells: usize,
}

/// Closed-form eigenvalues of a real 2×2 matrix.
fn eig2(m: [[f64; 2]; 2]) -> [C64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = C64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    [
        (C64::new(tr, 0.0) + disc) * 0.5,
        (C64::new(tr, 0.0) - disc) * 0.5,
    ]
}

fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// A Hermitian 2×2 point with eigenvalues `a ≥ 0 ≥ −b`, rotated by `θ`.
/// A relative phase could be removed by a diagonal unitary that fixes the
/// other (diagonal) point, so real rotations cover the family.
fn toy_point(tau: f64, sigma: f64, theta: f64) -> [[f64; 2]; 2] {
    let s = tau.abs() + sigma;
    let a = 0.5 * (s + tau);
    let b = 0.5 * (s - tau);
    let (c, sn) = (theta.cos(), theta.sin());
    [
        [a * c * c - b * sn * sn, (a + b) * c * sn],
        [(a + b) * c * sn, a * sn * sn - b * c * c],
    ]
}

/// `(S, T)` of the two-point measure with parameters `(c1, τ1, σ1, σ2, θ)`.
/// The second weight and trace follow from the volume and trace targets.
pub fn toy_functionals(params: [f64; 5], volume: f64, trace: f64) -> (f64, f64) {
    let [c1, tau1, sigma1, sigma2, theta] = params;
    let c2 = volume - c1;
    let tau2 = (trace - c1 * tau1) / c2;
    let x = [toy_point(tau1, sigma1, 0.0), toy_point(tau2, sigma2, theta)];
    let c = [c1, c2];
    let (mut s, mut t) = (0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let spec = eig2(mul2(x[i], x[j]));
            s += c[i] * c[j] * lagrangian(&spec, 1);
            t += c[i] * c[j] * boundedness(&spec);
        }
    }
    (s, t)
}

/// Coarse-to-fine grid search of the minimal action over the two-point
/// family, honouring `T ≤ bound`. Each level evaluates `points^5` cells and
/// the next level halves the box around the best one.
pub fn toy_grid_search(
    volume: f64,
    trace: f64,
    bound: f64,
    points: usize,
    levels: usize,
) -> GridOptimum {
    let r = 3.0 * trace.abs().max(volume.recip()) / volume;
    let domain = [
        (0.02 * volume, 0.98 * volume),
        (-r, r),
        (0.0, r),
        (0.0, r),
        (0.0, std::f64::consts::FRAC_PI_2),
    ];
    let mut boxes = domain;
    let mut best = GridOptimum {
        action: f64::INFINITY,
        boundedness: f64::NAN,
        params: [0.0; 5],
        cells: 0,
    };
    let mut cells = 0;
    for _ in 0..levels {
        let axis = |d: usize, k: usize| {
            let (lo, hi) = boxes[d];
            lo + (hi - lo) * k as f64 / (points - 1) as f64
        };
        let mut idx = [0usize; 5];
        loop {
            let p = [
                axis(0, idx[0]),
                axis(1, idx[1]),
                axis(2, idx[2]),
                axis(3, idx[3]),
                axis(4, idx[4]),
            ];
            cells += 1;
            let (s, t) = toy_functionals(p, volume, trace);
            if t <= bound && s < best.action {
                best = GridOptimum {
                    action: s,
                    boundedness: t,
                    params: p,
                    cells: 0,
                };
            }
            let mut d = 0;
            while d < 5 {
                idx[d] += 1;
                if idx[d] < points {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == 5 {
                break;
            }
        }
        for d in 0..5 {
            let (lo, hi) = boxes[d];
            let spacing = (hi - lo) / (points - 1) as f64;
            // shrink around an interior optimum, otherwise slide the box
            let on_edge = (best.params[d] - lo).abs() < 0.5 * spacing && lo > domain[d].0
                || (hi - best.params[d]).abs() < 0.5 * spacing && hi < domain[d].1;
            let half = if on_edge {
                0.5 * (hi - lo)
            } else {
                2.0 * spacing
            };
            let (mut a, mut b) = (best.params[d] - half, best.params[d] + half);
            if a < domain[d].0 {
                (a, b) = (domain[d].0, (domain[d].0 + 2.0 * half).min(domain[d].1));
            }
            if b > domain[d].1 {
                (a, b) = ((domain[d].1 - 2.0 * half).max(domain[d].0), domain[d].1);
            }
            boxes[d] = (a, b);
        }
    }
    best.cells = cells;
    best
}

/// `∫ conj(g_a) g_b d³p` for isotropic Gaussians `exp(−|p − k|²/(2w²))`
/// with a common width, in closed form.
pub fn gaussian_overlap(ka: [f64; 3], kb: [f64; 3], width: f64) -> f64 {
    let d2: f64 = ka.iter().zip(&kb).map(|(a, b)| (a - b).powi(2)).sum();
    (std::f64::consts::PI * width * width).powf(1.5) * (-d2 / (4.0 * width * width)).exp()
}
