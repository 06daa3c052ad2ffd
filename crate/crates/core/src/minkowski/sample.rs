//! Discretized Minkowski volume measure.

use serde::{Deserialize, Serialize};

use super::dirac::FourVector;
use crate::error::{validation, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeSample {
    points: Vec<FourVector>,
    cell_volumes: Vec<f64>,
}

impl SpacetimeSample {
    pub fn new(points: Vec<FourVector>, cell_volumes: Vec<f64>) -> Result<Self> {
        if points.len() != cell_volumes.len() {
            return Err(validation("one cell volume per sample point is required"));
        }
        if cell_volumes.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(validation("cell volumes must be finite and positive"));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(validation("sample coordinates must be finite"));
        }
        Ok(SpacetimeSample {
            points,
            cell_volumes,
        })
    }

    pub fn points(&self) -> &[FourVector] {
        &self.points
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Every point shifted by `shift`.
    pub fn translated(&self, shift: FourVector) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| std::array::from_fn(|k| p[k] + shift[k]))
            .collect();
        SpacetimeSample {
            points,
            cell_volumes: self.cell_volumes.clone(),
        }
    }
}

/// Regular lattice `origin + (i_t dt, i_x dx, i_y dy, i_z dz)`; every point
/// carries the cell volume `dt·dx·dy·dz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleGrid {
    /// Points along `t, x, y, z`.
    pub counts: [usize; 4],
    pub spacing: [f64; 4],
    #[serde(default)]
    pub origin: [f64; 4],
}

impl SampleGrid {
    pub fn to_sample(&self) -> Result<SpacetimeSample> {
        if self.spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(validation("grid spacings must be finite and positive"));
        }
        let volume: f64 = self.spacing.iter().product();
        let [nt, nx, ny, nz] = self.counts;
        let mut points = Vec::with_capacity(nt * nx * ny * nz);
        for it in 0..nt {
            for ix in 0..nx {
                for iy in 0..ny {
                    for iz in 0..nz {
                        let idx = [it, ix, iy, iz];
                        points.push(std::array::from_fn(|k| {
                            self.origin[k] + self.spacing[k] * idx[k] as f64
                        }));
                    }
                }
            }
        }
        let n = points.len();
        SpacetimeSample::new(points, vec![volume; n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_enumerates_all_points() {
        let grid = SampleGrid {
            counts: [2, 3, 1, 1],
            spacing: [0.5, 1.0, 1.0, 2.0],
            origin: [0.0; 4],
        };
        let sample = grid.to_sample().unwrap();
        assert_eq!(sample.len(), 6);
        assert_eq!(sample.cell_volumes()[0], 1.0);
        assert_eq!(sample.points()[5], [0.5, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn invalid_samples_are_rejected() {
        assert!(SpacetimeSample::new(vec![[0.0; 4]], vec![0.0]).is_err());
        assert!(SpacetimeSample::new(vec![[0.0; 4]], vec![]).is_err());
    }
}
