//! Causal Lagrangian, causal action, constraint functionals and the spectral
//! causal structure of discrete measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::linalg::CompensatedSum;
use crate::operators::{product_spectrum_unchecked, OperatorPoint, ProductSpectrum, SystemConfig};

/// A finite weighted sum of point masses on the operator set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    cfg: SystemConfig,
    points: Vec<OperatorPoint>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure; weights must be finite and strictly positive since
    /// zero-weight points are not part of the support. An empty support is
    /// accepted as a degenerate measure.
    pub fn new(cfg: SystemConfig, points: Vec<OperatorPoint>, weights: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if points.len() != weights.len() {
            return Err(validation(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(validation(format!("weight {w} is not finite and positive")));
        }
        for p in &points {
            if p.evaluation().nrows() != cfg.rank_bound() || p.hilbert_dim() != cfg.hilbert_dim {
                return Err(validation(
                    "point dimensions do not match the system configuration",
                ));
            }
        }
        Ok(Self {
            cfg,
            points,
            weights,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn points(&self) -> &[OperatorPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `ρ(F) = Σ c_i`.
    pub fn total_volume(&self) -> f64 {
        self.weights
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    /// All weights multiplied by `factor > 0`.
    pub fn with_scaled_weights(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.cfg,
            self.points.clone(),
            self.weights.iter().map(|w| w * factor).collect(),
        )
    }

    /// Every point conjugated by the same unitary on the Hilbert space.
    pub fn conjugated(&self, unitary: &crate::linalg::CMatrix) -> Self {
        Self {
            cfg: self.cfg,
            points: self.points.iter().map(|p| p.conjugated(unitary)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Values of the four functionals of the action principle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// `ρ(F)`.
    pub volume: f64,
    /// `∫ tr(x) dρ(x)`.
    pub trace_integral: f64,
    /// `T(ρ)`.
    pub boundedness: f64,
    /// `S(ρ)`.
    pub action: f64,
}

impl ConstraintReport {
    pub const CSV_HEADER: &'static str = "volume,trace_integral,boundedness,action";

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{}",
            self.volume, self.trace_integral, self.boundedness, self.action
        )
    }
}

/// Causal relation between two points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalKind {
    Spacelike,
    Timelike,
    Lightlike,
}

impl CausalKind {
    pub const ALL: [CausalKind; 3] = [
        CausalKind::Spacelike,
        CausalKind::Timelike,
        CausalKind::Lightlike,
    ];

    pub fn index(self) -> usize {
        match self {
            CausalKind::Spacelike => 0,
            CausalKind::Timelike => 1,
            CausalKind::Lightlike => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CausalKind::Spacelike => "spacelike",
            CausalKind::Timelike => "timelike",
            CausalKind::Lightlike => "lightlike",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalRelation {
    pub kind: CausalKind,
    /// `(max |λ| − min |λ|) / max(max |λ|, tol_rank)`.
    pub spread: f64,
    /// `max |Im λ| / max(max |λ|, tol_rank)`.
    pub max_imag: f64,
}

/// `(1/4n) Σ_{i,j} (|λ_i| − |λ_j|)²` over the `2n` zero-padded eigenvalues.
pub fn lagrangian_from_spectrum(spectrum: &ProductSpectrum) -> f64 {
    let moduli = spectrum.moduli();
    let two_n = moduli.len();
    if two_n == 0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for a in &moduli {
        for b in &moduli {
            let d = a - b;
            acc.add(d * d);
        }
    }
    acc.value() / (2.0 * two_n as f64)
}

/// `(Σ_i |λ_i|)²`.
pub fn boundedness_from_spectrum(spectrum: &ProductSpectrum) -> f64 {
    let s: f64 = spectrum
        .moduli()
        .into_iter()
        .collect::<CompensatedSum>()
        .value();
    s * s
}

pub fn lagrangian(x: &OperatorPoint, y: &OperatorPoint, cfg: &SystemConfig) -> Result<f64> {
    Ok(lagrangian_from_spectrum(
        &crate::operators::product_spectrum(x, y, cfg)?,
    ))
}

pub fn boundedness_integrand(
    x: &OperatorPoint,
    y: &OperatorPoint,
    cfg: &SystemConfig,
) -> Result<f64> {
    Ok(boundedness_from_spectrum(
        &crate::operators::product_spectrum(x, y, cfg)?,
    ))
}

/// Lagrangian and boundedness integrand for every ordered pair `i ≤ j`,
/// in row-major order. Pairs are evaluated in parallel; the output order is
/// fixed, so reductions over it are independent of the thread count.
pub(crate) fn pair_terms(points: &[OperatorPoint], tol_rank: f64) -> Vec<(usize, usize, f64, f64)> {
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let s = product_spectrum_unchecked(&points[i], &points[j], tol_rank);
            (
                i,
                j,
                lagrangian_from_spectrum(&s),
                boundedness_from_spectrum(&s),
            )
        })
        .collect()
}

/// Action and boundedness functional of weighted points, with the diagonal
/// included and off-diagonal pairs counted twice.
pub(crate) fn action_and_boundedness(
    points: &[OperatorPoint],
    weights: &[f64],
    tol_rank: f64,
) -> (f64, f64) {
    let mut action = CompensatedSum::new();
    let mut bounded = CompensatedSum::new();
    for (i, j, l, b) in pair_terms(points, tol_rank) {
        let w = weights[i] * weights[j] * if i == j { 1.0 } else { 2.0 };
        action.add(w * l);
        bounded.add(w * b);
    }
    (action.value(), bounded.value())
}

/// `S(ρ) = Σ_{i,j} c_i c_j L(x_i, x_j)`.
pub fn action(rho: &DiscreteMeasure) -> f64 {
    action_and_boundedness(&rho.points, &rho.weights, rho.cfg.tol_rank).0
}

pub fn constraint_report(rho: &DiscreteMeasure) -> ConstraintReport {
    let (action, boundedness) = action_and_boundedness(&rho.points, &rho.weights, rho.cfg.tol_rank);
    let trace_integral = rho
        .points
        .iter()
        .zip(&rho.weights)
        .map(|(p, w)| w * p.trace())
        .collect::<CompensatedSum>()
        .value();
    ConstraintReport {
        volume: rho.total_volume(),
        trace_integral,
        boundedness,
        action,
    }
}

/// Classifies a product spectrum. A zero spectrum has equal moduli and is
/// therefore spacelike.
pub fn classify_spectrum(spectrum: &ProductSpectrum, tol_rank: f64, tol_eq: f64) -> CausalRelation {
    let moduli = spectrum.moduli();
    let max_m = moduli.iter().fold(0.0_f64, |a, &b| a.max(b));
    let min_m = moduli.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let denom = max_m.max(tol_rank);
    let (spread, max_imag) = if max_m == 0.0 || denom == 0.0 {
        (0.0, 0.0)
    } else {
        let imag = spectrum
            .values
            .iter()
            .fold(0.0_f64, |a, z| a.max(z.im.abs()));
        ((max_m - min_m) / denom, imag / denom)
    };
    let kind = if spread <= tol_eq {
        CausalKind::Spacelike
    } else if max_imag <= tol_eq {
        CausalKind::Timelike
    } else {
        CausalKind::Lightlike
    };
    CausalRelation {
        kind,
        spread,
        max_imag,
    }
}

pub fn classify(
    x: &OperatorPoint,
    y: &OperatorPoint,
    cfg: &SystemConfig,
) -> Result<CausalRelation> {
    let s = crate::operators::product_spectrum(x, y, cfg)?;
    Ok(classify_spectrum(&s, cfg.tol_rank, cfg.tol_eq))
}

/// Relabels the support: point `i` (with its weight) moves to position
/// `map[i]`. `map` must be a permutation of `0..len`.
pub fn push_forward(rho: &DiscreteMeasure, map: &[usize]) -> Result<DiscreteMeasure> {
    let n = rho.len();
    if map.len() != n {
        return Err(validation(format!(
            "map has {} entries for {n} support points",
            map.len()
        )));
    }
    let mut seen = vec![false; n];
    for &target in map {
        if target >= n || seen[target] {
            return Err(validation("map is not a bijection of the support"));
        }
        seen[target] = true;
    }
    let mut points = rho.points.clone();
    let mut weights = rho.weights.clone();
    for (i, &target) in map.iter().enumerate() {
        points[target] = rho.points[i].clone();
        weights[target] = rho.weights[i];
    }
    Ok(DiscreteMeasure {
        cfg: rho.cfg,
        points,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, diag_real, real, CMatrix};
    use crate::operators::make_point_from_spectral;

    fn spectrum(values: &[(f64, f64)]) -> ProductSpectrum {
        ProductSpectrum::from_values(values.iter().map(|&(re, im)| c64(re, im)).collect())
    }

    fn diagonal(cfg: &SystemConfig, eig: &[f64]) -> OperatorPoint {
        let cols = CMatrix::from_fn(cfg.hilbert_dim, eig.len(), |i, j| {
            real(if i == j { 1.0 } else { 0.0 })
        });
        make_point_from_spectral(&cols, eig, cfg).unwrap()
    }

    #[test]
    fn lagrangian_of_three_one_spectrum() {
        // (1/4)[(3-1)^2 + (1-3)^2]
        assert_eq!(
            lagrangian_from_spectrum(&spectrum(&[(3.0, 0.0), (1.0, 0.0)])),
            2.0
        );
        assert_eq!(
            boundedness_from_spectrum(&spectrum(&[(3.0, 0.0), (1.0, 0.0)])),
            16.0
        );
    }

    #[test]
    fn lagrangian_vanishes_on_equal_moduli() {
        assert_eq!(
            lagrangian_from_spectrum(&spectrum(&[(0.0, 2.0), (0.0, -2.0)])),
            0.0
        );
        assert_eq!(
            lagrangian_from_spectrum(&spectrum(&[(0.0, 0.0), (0.0, 0.0)])),
            0.0
        );
    }

    #[test]
    fn classification_examples() {
        let tol = SystemConfig::DEFAULT_TOL_EQ;
        assert_eq!(
            classify_spectrum(&spectrum(&[(2.0, 0.0), (2.0, 0.0)]), 1e-10, tol).kind,
            CausalKind::Spacelike
        );
        assert_eq!(
            classify_spectrum(&spectrum(&[(3.0, 0.0), (1.0, 0.0)]), 1e-10, tol).kind,
            CausalKind::Timelike
        );
        assert_eq!(
            classify_spectrum(&spectrum(&[(0.0, 2.0), (1.0, 0.0)]), 1e-10, tol).kind,
            CausalKind::Lightlike
        );
        let zero = classify_spectrum(&spectrum(&[(0.0, 0.0), (0.0, 0.0)]), 0.0, 0.0);
        assert_eq!(zero.kind, CausalKind::Spacelike);
        assert_eq!(zero.spread, 0.0);
    }

    #[test]
    fn action_of_single_points() {
        let cfg = SystemConfig::new(4, 1).unwrap();
        let traceless = diagonal(&cfg, &[1.5, -1.5]);
        let rho = DiscreteMeasure::new(cfg, vec![traceless], vec![3.0]).unwrap();
        assert!(action(&rho).abs() < 1e-14);

        // x² has spectrum (4, 1): L = (1/4)(9 + 9)
        let x = diagonal(&cfg, &[2.0, -1.0]);
        let rho = DiscreteMeasure::new(cfg, vec![x], vec![1.0]).unwrap();
        assert!((action(&rho) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn report_of_single_traceless_point() {
        let cfg = SystemConfig::new(4, 1).unwrap();
        let rho = DiscreteMeasure::new(cfg, vec![diagonal(&cfg, &[1.0, -1.0])], vec![2.0]).unwrap();
        let r = constraint_report(&rho);
        assert_eq!(r.volume, 2.0);
        assert!(r.trace_integral.abs() < 1e-15);
        // (1 + 1)^2 * 2^2
        assert!((r.boundedness - 16.0).abs() < 1e-12);
    }

    #[test]
    fn empty_measure_reports_zeros() {
        let cfg = SystemConfig::new(4, 1).unwrap();
        let rho = DiscreteMeasure::new(cfg, vec![], vec![]).unwrap();
        let r = constraint_report(&rho);
        assert_eq!(
            r,
            ConstraintReport {
                volume: 0.0,
                trace_integral: 0.0,
                boundedness: 0.0,
                action: 0.0
            }
        );
        assert_eq!(r.csv_record(), "0,0,0,0");
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let cfg = SystemConfig::new(4, 1).unwrap();
        let x = diagonal(&cfg, &[1.0, -1.0]);
        assert!(DiscreteMeasure::new(cfg, vec![x.clone()], vec![0.0]).is_err());
        assert!(DiscreteMeasure::new(cfg, vec![x.clone()], vec![f64::NAN]).is_err());
        assert!(DiscreteMeasure::new(cfg, vec![x], vec![]).is_err());
    }

    #[test]
    fn push_forward_validates_bijection() {
        let cfg = SystemConfig::new(4, 1).unwrap();
        let a = diagonal(&cfg, &[1.0, -1.0]);
        let b = diagonal(&cfg, &[2.0, -0.5]);
        let rho = DiscreteMeasure::new(cfg, vec![a, b], vec![1.0, 2.0]).unwrap();
        assert_eq!(push_forward(&rho, &[0, 1]).unwrap(), rho);
        let swapped = push_forward(&rho, &[1, 0]).unwrap();
        assert_eq!(swapped.weights(), &[2.0, 1.0]);
        let (r1, r2) = (constraint_report(&swapped), constraint_report(&rho));
        assert!((r1.action - r2.action).abs() <= 1e-12 * r2.action.abs().max(1.0));
        assert!((r1.boundedness - r2.boundedness).abs() <= 1e-12 * r2.boundedness);
        assert!(push_forward(&rho, &[0, 0]).is_err());
        assert!(push_forward(&rho, &[0]).is_err());
        assert!(push_forward(&rho, &[0, 2]).is_err());
    }

    #[test]
    fn zero_point_is_spacelike_to_everything() {
        let cfg = SystemConfig::new(4, 1).unwrap();
        let x = OperatorPoint::new(CMatrix::zeros(2, 4), diag_real(&[0.0, 0.0]), &cfg).unwrap();
        let y = diagonal(&cfg, &[3.0, -1.0]);
        let rel = classify(&x, &y, &cfg).unwrap();
        assert_eq!(rel.kind, CausalKind::Spacelike);
        assert_eq!(lagrangian(&x, &y, &cfg).unwrap(), 0.0);
    }
}
