//! JSON and CSV persistence.
//!
//! Complex matrices are stored row-major as nested arrays of `[re, im]`
//! pairs. `serde_json` writes the shortest round-tripping decimal for every
//! double, so save-then-load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::{ConstraintReport, DiscreteMeasure};
use crate::error::{validation, CfsError, Result};
use crate::linalg::{c64, CMatrix};
use crate::operators::{OperatorPoint, SystemConfig};

pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_rows(rows: &MatrixRows) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(validation("ragged matrix rows"));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        c64(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointJson {
    pub evaluation: MatrixRows,
    pub form: MatrixRows,
}

impl PointJson {
    pub fn from_point(x: &OperatorPoint) -> Self {
        PointJson {
            evaluation: matrix_to_rows(x.evaluation()),
            form: matrix_to_rows(x.form()),
        }
    }

    pub fn into_point(self, cfg: &SystemConfig) -> Result<OperatorPoint> {
        let rank = cfg.rank_bound();
        // an empty row list cannot carry its column count
        let evaluation = if self.evaluation.is_empty() && rank == 0 {
            CMatrix::zeros(0, cfg.hilbert_dim)
        } else {
            matrix_from_rows(&self.evaluation)?
        };
        let form = matrix_from_rows(&self.form)?;
        OperatorPoint::new(evaluation, form, cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    pub config: SystemConfig,
    pub weights: Vec<f64>,
    pub points: Vec<PointJson>,
}

impl MeasureJson {
    pub fn from_measure(rho: &DiscreteMeasure) -> Self {
        MeasureJson {
            config: *rho.config(),
            weights: rho.weights().to_vec(),
            points: rho.points().iter().map(PointJson::from_point).collect(),
        }
    }

    pub fn into_measure(self) -> Result<DiscreteMeasure> {
        self.config.validate()?;
        let points = self
            .points
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                p.into_point(&self.config)
                    .map_err(|e| validation(format!("point {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(self.config, points, self.weights)
    }
}

pub fn measure_to_json(rho: &DiscreteMeasure) -> String {
    serde_json::to_string_pretty(&MeasureJson::from_measure(rho)).expect("measure serializes")
}

pub fn measure_from_json(text: &str) -> Result<DiscreteMeasure> {
    let raw: MeasureJson =
        serde_json::from_str(text).map_err(|e| validation(format!("malformed measure: {e}")))?;
    raw.into_measure()
}

pub fn save_measure(rho: &DiscreteMeasure, path: &Path) -> Result<()> {
    write_text(path, &measure_to_json(rho))
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    measure_from_json(&read_text(path)?)
}

pub fn report_to_json(report: &ConstraintReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn report_to_csv(report: &ConstraintReport) -> String {
    format!(
        "{}\n{}\n",
        ConstraintReport::CSV_HEADER,
        report.csv_record()
    )
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CfsError::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CfsError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::constraint_report;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn measure_round_trip_is_exact() {
        let cfg = SystemConfig::new(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points = (0..3)
            .map(|_| OperatorPoint::random(&mut rng, &cfg))
            .collect();
        let rho = DiscreteMeasure::new(cfg, points, vec![0.3, 1.7, 2.0 / 3.0]).unwrap();
        let back = measure_from_json(&measure_to_json(&rho)).unwrap();
        assert_eq!(back, rho);
        assert_eq!(constraint_report(&back), constraint_report(&rho));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text =
            r#"{"config":{"hilbert_dim":2,"spin_dim":1},"weights":[],"points":[],"extra":1}"#;
        assert!(measure_from_json(text).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let rows = vec![vec![[1.0, 0.0]], vec![]];
        assert!(matrix_from_rows(&rows).is_err());
    }
}
