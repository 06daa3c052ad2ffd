//! Agreement between the spectral causal structure and the light cone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::DiracBasisSpec;
use super::dirac::FourVector;
use super::sample::SpacetimeSample;
use crate::action::{classify_spectrum, CausalKind, DiscreteMeasure};
use crate::error::{validation, Result};
use crate::operators::product_spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryTolerances {
    /// Relative tolerance of the spectral classification.
    #[serde(default = "RecoveryTolerances::default_tol_eq")]
    pub tol_eq: f64,
    /// Relative width of the lightlike band of the reference relation.
    #[serde(default = "RecoveryTolerances::default_band")]
    pub band: f64,
}

impl Default for RecoveryTolerances {
    fn default() -> Self {
        RecoveryTolerances {
            tol_eq: Self::default_tol_eq(),
            band: Self::default_band(),
        }
    }
}

impl RecoveryTolerances {
    fn default_tol_eq() -> f64 {
        1e-8
    }

    fn default_band() -> f64 {
        0.05
    }
}

/// Minkowski relation of `ξ`: lightlike when `|t² − |x⃗|²| ≤ band·(t² + |x⃗|²)`
/// (including `ξ = 0`), otherwise by the sign of `t² − |x⃗|²`.
pub fn minkowski_relation(xi: FourVector, band: f64) -> CausalKind {
    let t2 = xi[0] * xi[0];
    let x2 = xi[1] * xi[1] + xi[2] * xi[2] + xi[3] * xi[3];
    let interval = t2 - x2;
    if interval.abs() <= band * (t2 + x2) {
        CausalKind::Lightlike
    } else if interval > 0.0 {
        CausalKind::Timelike
    } else {
        CausalKind::Spacelike
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub spacelike: Option<f64>,
    pub timelike: Option<f64>,
    pub lightlike: Option<f64>,
    pub overall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// Rows: Minkowski reference; columns: spectral classification; both in
    /// the order spacelike, timelike, lightlike.
    pub confusion: [[usize; 3]; 3],
    pub agreement: Agreement,
}

impl RecoveryReport {
    pub const CSV_HEADER: &'static str = "epsilon,pairs,spacelike,timelike,lightlike,overall,\
        ss,st,sl,ts,tt,tl,ls,lt,ll";

    pub fn from_confusion(confusion: [[usize; 3]; 3]) -> Self {
        let ratio = |hits: usize, total: usize| (total > 0).then(|| hits as f64 / total as f64);
        let row = |k: usize| confusion[k].iter().sum::<usize>();
        let total: usize = (0..3).map(row).sum();
        let hits: usize = (0..3).map(|k| confusion[k][k]).sum();
        RecoveryReport {
            confusion,
            agreement: Agreement {
                spacelike: ratio(confusion[0][0], row(0)),
                timelike: ratio(confusion[1][1], row(1)),
                lightlike: ratio(confusion[2][2], row(2)),
                overall: ratio(hits, total),
            },
        }
    }

    pub fn pairs(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn csv_record(&self, epsilon: f64) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
        let a = &self.agreement;
        let cells: Vec<String> = self
            .confusion
            .iter()
            .flatten()
            .map(usize::to_string)
            .collect();
        format!(
            "{epsilon},{},{},{},{},{},{}",
            self.pairs(),
            fmt(a.spacelike),
            fmt(a.timelike),
            fmt(a.lightlike),
            fmt(a.overall),
            cells.join(",")
        )
    }
}

/// Compares the classification of every pair `i < j` of an already built
/// measure with the reference relation of `x_i − x_j`.
pub fn recovery_from_measure(
    sample: &SpacetimeSample,
    measure: &DiscreteMeasure,
    tol: &RecoveryTolerances,
) -> Result<RecoveryReport> {
    if sample.len() != measure.len() {
        return Err(validation("sample and measure sizes differ"));
    }
    let n = sample.len();
    let cfg = measure.config();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let outcomes = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (sample.points()[i], sample.points()[j]);
            let xi = std::array::from_fn(|k| a[k] - b[k]);
            let reference = minkowski_relation(xi, tol.band);
            let spectrum = product_spectrum(&measure.points()[i], &measure.points()[j], cfg)?;
            let kind = classify_spectrum(&spectrum, cfg.tol_rank, tol.tol_eq).kind;
            Ok((reference.index(), kind.index()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut confusion = [[0usize; 3]; 3];
    for (r, c) in outcomes {
        confusion[r][c] += 1;
    }
    Ok(RecoveryReport::from_confusion(confusion))
}

pub fn causal_recovery_report(
    sample: &SpacetimeSample,
    spec: &DiracBasisSpec,
    tol: &RecoveryTolerances,
) -> Result<RecoveryReport> {
    let measure = super::build_minkowski_cfs(sample, spec)?;
    recovery_from_measure(sample, &measure, tol)
}
