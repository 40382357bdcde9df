//! Exact multilinear fractional operators, Morrey-type norms, stopping-time
//! decompositions and testing constants on truncated dyadic trees.
//!
//! Functions are constant on the leaves of a depth-`L` dyadic tree over
//! `[0,1)^n`, so every cube integral is a finite sum and every supremum over
//! dyadic cubes is a finite scan.

pub mod constants;
pub mod decompositions;
pub mod error;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod scan;
pub mod schema;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use error::{DtlError, Result};
pub use grid::{
    cube_stats, enlarged_sum, ingest, navigate, AggregateKind, CubeAddr, CubeStats, Ingested,
    LeafField, LeafMeasure, RawLeafData, Relation, RootSpec, TreeAggregate, DEFAULT_LEAF_CAP,
};
pub use norms::ExponentProfile;
pub use operators::KernelWeight;
pub use scan::{ratio, Sup};
