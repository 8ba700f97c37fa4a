use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GradeBlock, GradeLabel, GradedAlgebra};
use crate::error::{HensError, Result};
use crate::linalg;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockEntry {
    pub label: String,
    pub dim: usize,
}

/// On-disk form of a [`GradedAlgebra`]; structure entries are
/// `[i, j, k, value]` with 0-based indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub name: String,
    pub grades: Vec<BlockEntry>,
    pub structure: Vec<(usize, usize, usize, f64)>,
    pub metric: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0_rep: Option<Vec<Vec<Vec<f64>>>>,
}

impl AlgebraFile {
    pub fn into_algebra(self) -> Result<GradedAlgebra> {
        let blocks = self
            .grades
            .iter()
            .map(|g| {
                Ok(GradeBlock {
                    label: g.label.parse::<GradeLabel>()?,
                    dim: g.dim,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let metric = linalg::from_rows(&self.metric)?;
        let d0_rep = self
            .d0_rep
            .map(|reps| reps.iter().map(|m| linalg::from_rows(m)).collect::<Result<Vec<_>>>())
            .transpose()?;
        GradedAlgebra::new(self.name, blocks, &self.structure, metric, d0_rep)
    }
}

impl From<&GradedAlgebra> for AlgebraFile {
    fn from(alg: &GradedAlgebra) -> Self {
        AlgebraFile {
            name: alg.name().to_string(),
            grades: alg
                .blocks()
                .iter()
                .map(|b| BlockEntry {
                    label: b.label.to_string(),
                    dim: b.dim,
                })
                .collect(),
            structure: alg.structure_entries(),
            metric: linalg::to_rows(alg.metric()),
            d0_rep: alg
                .d0_rep()
                .map(|reps| reps.iter().map(linalg::to_rows).collect()),
        }
    }
}

impl GradedAlgebra {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: AlgebraFile = serde_json::from_str(s)?;
        file.into_algebra()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Either a built-in name such as `contact3(1,0,1)` or a path to a JSON
    /// file.
    pub fn load(spec: &str) -> Result<Self> {
        match super::builtin(spec) {
            Ok(alg) => Ok(alg),
            Err(HensError::Parse(_)) if Path::new(spec).exists() => Self::from_json_file(spec),
            Err(HensError::Parse(_)) => Err(HensError::Parse(format!(
                "{spec:?} is neither a built-in algebra nor an existing file"
            ))),
            Err(e) => Err(e),
        }
    }

    pub fn to_file(&self) -> AlgebraFile {
        AlgebraFile::from(self)
    }
}
