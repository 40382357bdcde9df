//! JSON file format for leaf data.
//!
//! ```json
//! {"dim": 1, "depth": 2, "kind": "field", "values": [1, 2, 3, 4]}
//! {"dim": 1, "depth": 2, "kind": "atomic", "atoms": [[0, 1.0]]}
//! ```
//!
//! Values are listed in row-major leaf order (first coordinate slowest).

use serde::{Deserialize, Serialize};

use crate::error::{DtlError, Result};
use crate::grid::{ingest, Ingested, LeafField, LeafMeasure, RawLeafData, RootSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafKind {
    Field,
    Density,
    Atomic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafFile {
    pub dim: usize,
    pub depth: u32,
    pub kind: LeafKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(usize, f64)>>,
}

impl LeafFile {
    pub fn from_field(f: &LeafField) -> Self {
        let root = f.root();
        Self {
            dim: root.dim(),
            depth: root.depth(),
            kind: LeafKind::Field,
            values: Some(f.values().to_vec()),
            atoms: None,
        }
    }

    pub fn from_measure(mu: &LeafMeasure) -> Self {
        let root = mu.root();
        let (kind, values, atoms) = match mu {
            LeafMeasure::Density(d) => (LeafKind::Density, Some(d.values().to_vec()), None),
            LeafMeasure::Atomic { atoms, .. } => (LeafKind::Atomic, None, Some(atoms.clone())),
        };
        Self { dim: root.dim(), depth: root.depth(), kind, values, atoms }
    }

    pub fn root(&self) -> Result<RootSpec> {
        RootSpec::new(self.dim, self.depth)
    }

    /// Validates and converts; a missing payload is a zero-length shape error.
    pub fn load(&self) -> Result<Ingested> {
        let root = self.root()?;
        let missing = |expected| DtlError::ShapeMismatch { expected, got: 0 };
        let raw = match self.kind {
            LeafKind::Field => {
                RawLeafData::Field(self.values.clone().ok_or_else(|| missing(root.leaf_count()))?)
            }
            LeafKind::Density => {
                RawLeafData::Density(self.values.clone().ok_or_else(|| missing(root.leaf_count()))?)
            }
            LeafKind::Atomic => RawLeafData::Atomic(self.atoms.clone().unwrap_or_default()),
        };
        ingest(root, raw)
    }
}
