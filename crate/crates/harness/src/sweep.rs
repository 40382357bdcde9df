//! Depth sweeps of one registry id with growth detection.

use dtl_core::schema::LeafFile;
use dtl_core::RootSpec;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentSpec, ProfileFile};
use crate::error::HarnessResult;
use crate::generate::{generate_field, generate_measure, trial_seed, GeneratorKind};
use crate::registry::{lookup, Context, Entry, Hypothesis, TrialInputs, EXACT_TOL};
use crate::report::finite_or_tag;

/// Largest accepted least-squares slope of `ln(max ratio)` per depth level.
pub const SLOPE_TOL: f64 = 0.05;
/// Largest accepted `max ratio(last depth) / max ratio(first depth)`.
pub const GROWTH_TOL: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub field_kind: GeneratorKind,
    pub measure_kind: GeneratorKind,
    #[serde(serialize_with = "finite_or_tag")]
    pub lhs: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub rhs: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub ratio: f64,
    pub hypotheses: Vec<Hypothesis>,
}

/// Inputs of the trial attaining the per-depth maximum, in the ingest schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub fields: Vec<LeafFile>,
    pub g: LeafFile,
    pub mu: LeafFile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthResult {
    pub depth: u32,
    #[serde(serialize_with = "finite_or_tag")]
    pub max_ratio: f64,
    pub witness: Witness,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimResult {
    pub dim: usize,
    pub profile: ProfileFile,
    pub depths: Vec<DepthResult>,
    #[serde(serialize_with = "finite_or_tag")]
    pub slope: f64,
    pub pass: bool,
}

impl DimResult {
    pub fn max_ratio_at(&self, depth: u32) -> Option<f64> {
        self.depths.iter().find(|d| d.depth == depth).map(|d| d.max_ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub id: String,
    pub exact: bool,
    pub seed: u64,
    pub trials: usize,
    pub dims: Vec<DimResult>,
    pub pass: bool,
}

/// Least-squares slope of `ln r` against depth; zero ratios are clamped to
/// the smallest positive float so that growth out of zero counts as growth.
pub fn log_slope(depths: &[u32], ratios: &[f64]) -> f64 {
    let k = depths.len() as f64;
    if depths.len() < 2 {
        return 0.0;
    }
    let ys: Vec<f64> = ratios.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let mx = depths.iter().map(|&d| d as f64).sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&d, y) in depths.iter().zip(&ys) {
        sxy += (d as f64 - mx) * (y - my);
        sxx += (d as f64 - mx).powi(2);
    }
    sxy / sxx
}

/// Exact ids need every ratio below `1 + 1e-12`; the rest need finite ratios,
/// a small slope and bounded growth from the first to the last depth.
pub fn passes(exact: bool, ratios: &[f64], slope: f64) -> bool {
    if ratios.iter().any(|r| !r.is_finite()) {
        return false;
    }
    if exact {
        return ratios.iter().all(|&r| r <= 1.0 + EXACT_TOL);
    }
    let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
    slope <= SLOPE_TOL && last <= GROWTH_TOL * first
}

/// Fields use slots `0..m`, `g` slot `m` and `μ` slot `m + 1`.
pub fn trial_inputs(
    spec: &ExperimentSpec,
    file: &ProfileFile,
    root: &RootSpec,
    trial: usize,
) -> HarnessResult<TrialInputs> {
    let fk = spec.field_kinds[trial % spec.field_kinds.len()];
    let mk = spec.measure_kinds[trial % spec.measure_kinds.len()];
    let cfg = spec.generator_for(file);
    let m = file.m();
    let seed = |slot| trial_seed(spec.seed, root.dim(), root.depth(), trial, slot);
    let fields = (0..m)
        .map(|i| generate_field(fk, root, seed(i), &cfg))
        .collect::<HarnessResult<Vec<_>>>()?;
    Ok(TrialInputs {
        root: *root,
        fields,
        g: generate_field(fk, root, seed(m), &cfg)?,
        mu: generate_measure(mk, root, seed(m + 1), &cfg)?,
        field_kind: fk,
        measure_kind: mk,
    })
}

fn run_depth(
    spec: &ExperimentSpec,
    entry: &Entry,
    file: &ProfileFile,
    ctx: &Context<'_>,
    root: RootSpec,
) -> HarnessResult<DepthResult> {
    let records = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let inp = trial_inputs(spec, file, &root, t)?;
            let e = (entry.eval)(ctx, &inp)?;
            Ok(TrialRecord {
                trial: t,
                field_kind: inp.field_kind,
                measure_kind: inp.measure_kind,
                lhs: e.lhs,
                rhs: e.rhs,
                ratio: e.ratio,
                hypotheses: e.hypotheses,
            })
        })
        .collect::<HarnessResult<Vec<_>>>()?;
    // First trial wins ties; NaN beats everything so it surfaces in the report.
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        let b = records[best].ratio;
        if !b.is_nan() && (r.ratio.is_nan() || r.ratio > b) {
            best = i;
        }
    }
    let inp = trial_inputs(spec, file, &root, best)?;
    let witness = Witness {
        trial: best,
        fields: inp.fields.iter().map(LeafFile::from_field).collect(),
        g: LeafFile::from_field(&inp.g),
        mu: LeafFile::from_measure(&inp.mu),
    };
    Ok(DepthResult { depth: root.depth(), max_ratio: records[best].ratio, witness, trials: records })
}

pub fn sweep(spec: &ExperimentSpec) -> HarnessResult<RatioReport> {
    spec.validate()?;
    let entry = lookup(&spec.id)?;
    let mut dims = Vec::with_capacity(spec.dims.len());
    for &n in &spec.dims {
        let file = spec.profile_for(n);
        let ctx = Context::new(&file, n, spec.work_cap);
        let mut depths = Vec::with_capacity(spec.depths.len());
        for &l in &spec.depths {
            let root = RootSpec::with_cap(n, l, spec.work_cap)?;
            depths.push(run_depth(spec, entry, &file, &ctx, root)?);
        }
        let ls: Vec<u32> = depths.iter().map(|d| d.depth).collect();
        let rs: Vec<f64> = depths.iter().map(|d| d.max_ratio).collect();
        let slope = log_slope(&ls, &rs);
        let all: Vec<f64> = depths.iter().flat_map(|d| d.trials.iter().map(|t| t.ratio)).collect();
        let pass = passes(entry.exact, &rs, slope) && all.iter().all(|r| r.is_finite());
        dims.push(DimResult { dim: n, profile: file, depths, slope, pass });
    }
    let pass = dims.iter().all(|d| d.pass);
    Ok(RatioReport { id: spec.id.clone(), exact: entry.exact, seed: spec.seed, trials: spec.trials, dims, pass })
}
