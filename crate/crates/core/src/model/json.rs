//! JSON serialization of a quadratic program.
//!
//! ```json
//! {
//!   "partition": [1, 1],
//!   "Q": [2.0, 1.0, 1.0, 2.0],
//!   "r": [-1.0, -1.0],
//!   "constraints": [
//!     {"type": "box", "lower": [-1.0], "upper": [1.0]},
//!     {"type": "ball", "center": [0.0], "radius": 1.0}
//!   ]
//! }
//! ```
//!
//! `Q` is the full `n × n` matrix in row-major order. Doubles are written in
//! shortest round-trip form, so a write/read cycle reproduces every bit.
//! Constraint `type` is one of `box`, `ball`, `unconstrained`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ConstraintSet, QuadraticProgram};
use crate::error::Result;
use crate::linalg::{BlockMatrix, BlockPartition, BlockVector, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpDocument {
    pub partition: Vec<usize>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub constraints: Vec<ConstraintSet>,
}

impl QpDocument {
    pub fn from_qp(qp: &QuadraticProgram) -> Self {
        QpDocument {
            partition: qp.partition().sizes().to_vec(),
            q: qp.q().matrix().as_slice().to_vec(),
            r: qp.r().as_slice().to_vec(),
            constraints: qp.constraints().to_vec(),
        }
    }

    pub fn into_qp(self) -> Result<QuadraticProgram> {
        let partition = BlockPartition::new(self.partition)?;
        let n = partition.dim();
        let q = BlockMatrix::new(Matrix::from_row_major(n, n, self.q)?, partition.clone())?;
        let r = BlockVector::new(self.r, partition)?;
        QuadraticProgram::new(q, r, self.constraints)
    }
}

impl QuadraticProgram {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&QpDocument::from_qp(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<QpDocument>(s)?.into_qp()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
