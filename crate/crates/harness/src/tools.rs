//! The `constants` and `decompose` commands as plain functions.

use std::collections::BTreeMap;

use dtl_core::constants::{
    a0_constant, adams_constant, ap_characteristic, cq_constant, ks_testing_constant,
    A0Exponents, A0Form, ApExponent, ConstantReport, CqMode, Mode, DEFAULT_P_STAR,
    EXHAUSTIVE_MAX_CUBES,
};
use dtl_core::decompositions::{build_principal_cubes, build_sparse_family, PairMeasure};
use dtl_core::operators::KernelWeight;
use dtl_core::{CubeAddr, DtlError, LeafField, LeafMeasure, TreeAggregate};
use serde::Serialize;

use crate::config::ProfileFile;
use crate::error::HarnessResult;
use crate::report::finite_or_tag;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantRow {
    pub name: String,
    #[serde(serialize_with = "finite_or_tag")]
    pub value: f64,
    pub mode: Mode,
    pub witness: Vec<CubeAddr>,
    pub parameters: BTreeMap<String, f64>,
    pub bound_factor: Option<f64>,
}

impl From<ConstantReport> for ConstantRow {
    fn from(r: ConstantReport) -> Self {
        Self {
            name: r.name,
            value: r.value,
            mode: r.mode,
            witness: r.witness,
            parameters: r.parameters.into_iter().collect(),
            bound_factor: r.bound_factor,
        }
    }
}

/// Rows whose hypotheses the input does not meet are left out.
fn optional(r: dtl_core::Result<ConstantReport>) -> HarnessResult<Option<ConstantRow>> {
    match r {
        Ok(r) => Ok(Some(r.into())),
        Err(DtlError::AtomicPowerUndefined | DtlError::ZeroMeasure | DtlError::BadExponent(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Every constant of `μ` under the profile, in a fixed order.
pub fn constants_table(mu: &LeafMeasure, file: &ProfileFile) -> HarnessResult<Vec<ConstantRow>> {
    let root = mu.root();
    let pr = file.profile(root.dim())?;
    let agg = TreeAggregate::of_measure(mu);
    let mut rows: Vec<ConstantRow> = Vec::new();
    let adams_s = root.dim() as f64 - pr.beta() * pr.p();
    rows.extend(optional(adams_constant(&agg, adams_s))?);
    rows.extend(optional(ks_testing_constant(&agg, pr.beta(), pr.p()))?);
    let ex = A0Exponents::from(&pr);
    for form in [A0Form::WeightA, A0Form::BumpB, A0Form::SparseA, A0Form::SparseB] {
        rows.extend(optional(a0_constant(mu, &ex, form, None))?);
    }
    let k = KernelWeight::canonical(pr.alpha(), pr.m());
    let q = root.root();
    let mut modes = vec![CqMode::Greedy, CqMode::Bound];
    if root.cube_count() <= EXHAUSTIVE_MAX_CUBES {
        modes.insert(1, CqMode::Exhaustive);
    }
    for mode in modes {
        rows.extend(optional(cq_constant(&agg, &k, pr.m(), pr.p(), q, mode))?);
    }
    if let Some(d) = mu.density() {
        rows.extend(optional(ap_characteristic(d, ApExponent::Infinity { p_star: DEFAULT_P_STAR }))?);
    }
    Ok(rows)
}

pub fn constants_csv(rows: &[ConstantRow]) -> String {
    let mut out = String::from("name,mode,value\n");
    for r in rows {
        let mode = serde_json::to_value(r.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", r.name, mode, crate::report::float_text(r.value)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Member {
    pub cube: CubeAddr,
    pub parent: Option<CubeAddr>,
    pub generation: u32,
    /// Row-major leaf indices of the exceptional set `E`.
    pub e_leaves: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub kind: &'static str,
    /// Averages are taken against this measure; `None` for sparse families.
    pub pair: Option<PairMeasure>,
    pub members: Vec<Member>,
    pub is_sparse: bool,
    pub carleson: f64,
}

/// Stopping family of the product of `fields` below the root.
pub fn decompose_sparse(fields: &[LeafField]) -> HarnessResult<Decomposition> {
    let aggs: Vec<TreeAggregate> = fields.iter().map(TreeAggregate::of_field).collect();
    let root = fields.first().map(|f| f.root()).ok_or(DtlError::ShapeMismatch { expected: 1, got: 0 })?;
    let fam = build_sparse_family(&aggs, root.root())?;
    let cert = fam.certificate();
    let e: BTreeMap<CubeAddr, Vec<usize>> = cert.sets.iter().map(|s| (s.cube, s.leaves.clone())).collect();
    let members = (0..fam.len())
        .map(|i| {
            let cube = fam.cubes()[i];
            Member { cube, parent: fam.parent(i), generation: fam.generation(i), e_leaves: e[&cube].clone() }
        })
        .collect();
    Ok(Decomposition { kind: "sparse", pair: None, members, is_sparse: cert.is_sparse, carleson: cert.carleson })
}

/// Principal cubes of `(h, ν)`, `ν` Lebesgue when absent.
pub fn decompose_corona(h: &LeafField, nu: Option<&LeafMeasure>) -> HarnessResult<Decomposition> {
    let forest = build_principal_cubes(h, nu, h.root().root())?;
    let nodes = forest.nodes();
    let mut members = Vec::with_capacity(nodes.len());
    for node in nodes {
        members.push(Member {
            cube: node.cube,
            parent: node.parent.map(|j| nodes[j].cube),
            generation: node.generation,
            e_leaves: forest.exceptional_leaves(&node.cube)?,
        });
    }
    let cert = dtl_core::decompositions::verify_sparse(&h.root(), &forest.cubes())?;
    Ok(Decomposition {
        kind: "corona",
        pair: Some(forest.pair()),
        members,
        is_sparse: cert.is_sparse,
        carleson: cert.carleson,
    })
}
