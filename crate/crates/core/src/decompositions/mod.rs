//! Stopping-time constructions on the truncated tree.
//!
//! Exceptional sets are always canonical: a member minus the union of the
//! maximal members strictly inside it. Sparsity means each such set keeps at
//! least half of its cube.

mod corona;
mod sparse;

pub use corona::{
    build_principal_cubes, classify_children, corona_projection, exceeds_twice, stopping_parent,
    ChildClassification, CoronaForest, ForestNode, PairMeasure,
};
pub use sparse::{
    build_sparse_family, sparse_dominate, verify_sparse, Domination, ExceptionalSet,
    SparseCertifier, SparseCheck, SparseFamily,
};
