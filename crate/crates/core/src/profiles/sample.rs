use serde::{Deserialize, Serialize};

use crate::error::{HensError, Result};

/// A finite pointed metric space `[X, x, d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointedSample {
    /// Symmetric distance matrix with zero diagonal.
    pub distances: Vec<Vec<f64>>,
    /// Index of the base point.
    pub base: usize,
    /// Scale `ε` at which the sample was taken.
    #[serde(default = "one")]
    pub scale: f64,
    /// Solver noise carried by the entries: endpoint residuals and the
    /// largest triangle-inequality defect.
    #[serde(default)]
    pub noise: f64,
    /// Coordinates of the sampled points, when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

const SYMMETRY_TOL: f64 = 1e-12;

impl PointedSample {
    pub fn new(distances: Vec<Vec<f64>>, base: usize) -> Result<Self> {
        let s = Self {
            distances,
            base,
            scale: 1.0,
            noise: 0.0,
            points: Vec::new(),
        };
        s.check()?;
        Ok(s)
    }

    /// Validate shape, symmetry, zero diagonal, nonnegativity and base index.
    pub fn check(&self) -> Result<()> {
        let m = self.distances.len();
        if m == 0 {
            return Err(HensError::InvalidSample("empty sample".into()));
        }
        if self.base >= m {
            return Err(HensError::InvalidSample(format!("base {} out of range", self.base)));
        }
        for (i, row) in self.distances.iter().enumerate() {
            if row.len() != m {
                return Err(HensError::InvalidSample("distance matrix is not square".into()));
            }
            if row[i] != 0.0 {
                return Err(HensError::InvalidSample(format!("nonzero diagonal at {i}")));
            }
            for (j, &d) in row.iter().enumerate() {
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(HensError::InvalidSample(format!("bad entry ({i}, {j}): {d}")));
                }
                if (d - self.distances[j][i]).abs() > SYMMETRY_TOL * (1.0 + d) {
                    return Err(HensError::InvalidSample(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let sample: Self = serde_json::from_str(s)?;
        sample.check()?;
        Ok(sample)
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.distances[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.distances
            .iter()
            .flatten()
            .fold(0.0, |a: f64, &b| a.max(b))
    }

    /// Same points with every distance multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.distances {
            for d in row {
                *d *= factor;
            }
        }
        out.noise *= factor;
        out
    }

    /// `max(d_ik − d_ij − d_jk, 0)` over all triples.
    pub fn triangle_defect(&self) -> f64 {
        let m = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    worst = worst.max(self.d(i, k) - self.d(i, j) - self.d(j, k));
                }
            }
        }
        worst
    }

    pub(crate) fn check_diameter(&self) -> Result<()> {
        let diam = self.diameter();
        if diam > 2.0 + 1e-12 {
            return Err(HensError::DiameterViolation { diam });
        }
        Ok(())
    }
}
