//! Fixed-size verification suites behind `dtl verify`.

use std::fmt;
use std::str::FromStr;

use dtl_core::constants::{
    condition_d_bound, condition_d_geometric, condition_d_ratio, cq_constant, CqMode,
    EXHAUSTIVE_MAX_CUBES,
};
use dtl_core::decompositions::{
    build_principal_cubes, build_sparse_family, classify_children, corona_projection,
    stopping_parent, verify_sparse,
};
use dtl_core::operators::KernelWeight;
use dtl_core::{CubeAddr, RootSpec, TreeAggregate};
use serde::Serialize;

use crate::config::{ExperimentSpec, ProfileFile};
use crate::error::{HarnessError, HarnessResult};
use crate::report::finite_or_tag;
use crate::sweep::{sweep, trial_inputs};

/// Largest accepted exhaustive `C_Q` over its closed-form bound.
pub const CQ_BOUND_RATIO_TOL: f64 = 10.0;
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Exact,
    Sparse,
    Corona,
    Constants,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Self::Exact, Self::Sparse, Self::Corona, Self::Constants];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Sparse => "sparse",
            Self::Corona => "corona",
            Self::Constants => "constants",
        }
    }

    /// Registry ids swept at the single requested depth.
    pub fn registry_ids(&self) -> &'static [&'static str] {
        match self {
            Self::Exact => &[
                "morrey-nesting",
                "morrey-identity",
                "eq1.4-left",
                "eq4.1",
                "adams-identity",
                "packing-sparse",
                "packing-corona",
                "stopping-parent",
            ],
            Self::Sparse => &["packing-sparse", "sparse-domination"],
            Self::Corona => &["packing-corona", "stopping-parent"],
            Self::Constants => &["eq4.1", "adams-identity"],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    /// The statistic bounded by the check; its meaning depends on the check.
    #[serde(serialize_with = "finite_or_tag")]
    pub max_ratio: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), instances: 0, violations: 0, max_ratio: 0.0, pass: true }
    }

    fn record(&mut self, value: f64, ok: bool) {
        self.instances += 1;
        if value > self.max_ratio || value.is_nan() {
            self.max_ratio = value;
        }
        if !ok {
            self.violations += 1;
            self.pass = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub dim: usize,
    pub depth: u32,
    pub trials: usize,
    pub seed: u64,
    pub profile: ProfileFile,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Parameters shared by every suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub dim: usize,
    pub depth: u32,
    pub trials: usize,
    pub seed: u64,
    pub profile: Option<ProfileFile>,
    pub work_cap: u64,
}

impl SuiteParams {
    fn spec(&self, id: &str) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(id, vec![self.dim], self.depth..=self.depth, self.profile.clone());
        s.trials = self.trials;
        s.seed = self.seed;
        s.work_cap = self.work_cap;
        s
    }
}

fn registry_check(params: &SuiteParams, id: &str) -> HarnessResult<Check> {
    let report = sweep(&params.spec(id))?;
    let mut c = Check::new(id);
    for d in &report.dims {
        for t in d.depths.iter().flat_map(|x| &x.trials) {
            let ok = t.ratio.is_finite() && (!report.exact || t.ratio <= 1.0 + crate::registry::EXACT_TOL);
            c.record(t.ratio, ok);
        }
    }
    c.pass &= report.pass;
    Ok(c)
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Families are certified sparse with Carleson constant at most 2.
fn sparse_structure(params: &SuiteParams, root: RootSpec) -> HarnessResult<Vec<Check>> {
    let spec = params.spec("packing-sparse");
    let file = spec.profile_for(params.dim);
    let mut cert = Check::new("sparse-certificate");
    let mut carleson = Check::new("sparse-carleson");
    for t in 0..params.trials {
        let inp = trial_inputs(&spec, &file, &root, t)?;
        let aggs: Vec<TreeAggregate> = inp.fields.iter().map(TreeAggregate::of_field).collect();
        let fam = build_sparse_family(&aggs, root.root())?;
        let check = verify_sparse(&root, fam.cubes())?;
        cert.record(if check.is_sparse { 0.0 } else { 1.0 }, check.is_sparse);
        carleson.record(check.carleson, check.carleson <= 2.0 * (1.0 + REL_TOL));
    }
    Ok(vec![cert, carleson])
}

/// Child classification partitions the children and the projection keeps
/// every integral over cubes whose stopping parent is `G`.
fn corona_structure(params: &SuiteParams, root: RootSpec) -> HarnessResult<Vec<Check>> {
    let spec = params.spec("packing-corona");
    let file = spec.profile_for(params.dim);
    let mut part = Check::new("corona-partition");
    let mut proj = Check::new("corona-projection");
    for t in 0..params.trials {
        let inp = trial_inputs(&spec, &file, &root, t)?;
        if inp.mu.total_mass() == 0.0 {
            continue;
        }
        let gf = build_principal_cubes(&inp.g, Some(&inp.mu), root.root())?;
        for f in &inp.fields {
            let ff = build_principal_cubes(f, None, root.root())?;
            let fagg = TreeAggregate::of_field(f);
            for g in gf.cubes() {
                let class = classify_children(&gf, &ff, g)?;
                let mut all: Vec<CubeAddr> = class.classified().chain(&class.remainder).copied().collect();
                let listed = all.len();
                all.sort();
                all.dedup();
                let mut kids = gf.children_of(&g)?;
                kids.sort();
                let ok = all.len() == listed && all == kids;
                part.record(if ok { 0.0 } else { 1.0 }, ok);
                let pagg = TreeAggregate::of_field(&corona_projection(f, &gf, &class, g)?);
                let mut worst = 0.0f64;
                for q in root.cubes().filter(|q| g.contains(q)) {
                    if stopping_parent(&gf, q)? == g {
                        worst = worst.max(rel_err(pagg.mass(q), fagg.mass(q)));
                    }
                }
                proj.record(worst, worst <= REL_TOL);
            }
        }
    }
    Ok(vec![part, proj])
}

fn subtree_cubes(root: &RootSpec, q: CubeAddr) -> u64 {
    let n = root.dim() as u32;
    (0..=root.depth() - q.level()).map(|j| 1u64 << (n * j)).sum()
}

/// Condition D against its geometric formula, and the `C_Q` hierarchy
/// greedy ≤ exhaustive ≤ const · bound on cubes small enough to enumerate.
fn constants_structure(params: &SuiteParams, root: RootSpec) -> HarnessResult<Vec<Check>> {
    let spec = params.spec("eq4.1");
    let file = spec.profile_for(params.dim);
    let pr = file.profile(params.dim)?;
    let k = KernelWeight::canonical(pr.alpha(), pr.m());
    let mut cond = Check::new("condition-d");
    for q in root.cubes() {
        let measured = condition_d_ratio(&k, &pr, q);
        let formula = condition_d_geometric(root.dim(), pr.alpha(), pr.p0(), q.level());
        let bound = condition_d_bound(root.dim(), pr.alpha(), pr.p0());
        let e = rel_err(measured, formula);
        cond.record(e, e <= REL_TOL && measured <= bound);
    }
    let mut order = Check::new("cq-greedy-le-exhaustive");
    let mut bound = Check::new("cq-exhaustive-over-bound");
    for t in 0..params.trials {
        let inp = trial_inputs(&spec, &file, &root, t)?;
        let mu = TreeAggregate::of_measure(&inp.mu);
        for q in root.cubes() {
            if mu.mass(q) <= 0.0 || subtree_cubes(&root, q) > EXHAUSTIVE_MAX_CUBES as u64 {
                continue;
            }
            let g = cq_constant(&mu, &k, pr.m(), pr.p(), q, CqMode::Greedy)?.value;
            let x = cq_constant(&mu, &k, pr.m(), pr.p(), q, CqMode::Exhaustive)?.value;
            let b = cq_constant(&mu, &k, pr.m(), pr.p(), q, CqMode::Bound)?.value;
            order.record(rel_err(g.max(x), x), g <= x * (1.0 + REL_TOL));
            let r = dtl_core::ratio(x, b);
            bound.record(r, r <= CQ_BOUND_RATIO_TOL);
        }
    }
    Ok(vec![cond, order, bound])
}

pub fn run_suite(suite: Suite, params: &SuiteParams) -> HarnessResult<SuiteReport> {
    if params.trials == 0 {
        return Err(HarnessError::Config("trials must be positive".into()));
    }
    let root = RootSpec::with_cap(params.dim, params.depth, params.work_cap)?;
    let mut checks = suite
        .registry_ids()
        .iter()
        .map(|id| registry_check(params, id))
        .collect::<HarnessResult<Vec<_>>>()?;
    checks.extend(match suite {
        Suite::Exact => Vec::new(),
        Suite::Sparse => sparse_structure(params, root)?,
        Suite::Corona => corona_structure(params, root)?,
        Suite::Constants => constants_structure(params, root)?,
    });
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        suite,
        dim: params.dim,
        depth: params.depth,
        trials: params.trials,
        seed: params.seed,
        profile: params.profile.clone().unwrap_or_else(|| ProfileFile::default_for(params.dim)),
        checks,
        pass,
    })
}
