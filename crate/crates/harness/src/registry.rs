//! Every inequality as a named ratio `LHS / RHS`.

use dtl_core::constants::{
    a0_constant, adams_constant, ap_characteristic, cq_constant, embedding_constant,
    ks_testing_constant, sparse_family_sup, subtree_kernel_sums, A0Exponents, A0Form,
    ApExponent, CqMode, FamilySearch, DEFAULT_P_STAR,
};
use dtl_core::decompositions::{
    build_principal_cubes, build_sparse_family, sparse_dominate, stopping_parent, verify_sparse,
    CoronaForest,
};
use dtl_core::norms::{
    conjugate, lebesgue_norm, modified_morrey_norm, morrey_norm, product_morrey_for,
    radon_morrey_norm,
};
use dtl_core::operators::{
    discretization_majorant, dyadic_integral_operator, kernel_integral, sparse_integral_operator,
    KernelWeight,
};
use dtl_core::{
    ratio, CubeAddr, DtlError, ExponentProfile, LeafField, LeafMeasure, RootSpec, TreeAggregate,
};
use serde::Serialize;

use crate::config::{NestingExponents, ProfileFile};
use crate::error::{HarnessError, HarnessResult};
use crate::generate::GeneratorKind;

/// Inputs of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialInputs {
    pub root: RootSpec,
    pub fields: Vec<LeafField>,
    pub g: LeafField,
    pub mu: LeafMeasure,
    pub field_kind: GeneratorKind,
    pub measure_kind: GeneratorKind,
}

/// A measured hypothesis of the inequality; never enforced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    #[serde(serialize_with = "crate::report::finite_or_tag")]
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub hypotheses: Vec<Hypothesis>,
}

impl Evaluation {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, ratio: ratio(lhs, rhs), hypotheses: Vec::new() }
    }

    /// `max(l/r, r/l)` for identities.
    fn identity(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, ratio: ratio(lhs, rhs).max(ratio(rhs, lhs)), hypotheses: Vec::new() }
    }

    fn with(mut self, name: &str, value: f64, holds: bool) -> Self {
        self.hypotheses.push(Hypothesis { name: name.to_string(), value, holds });
        self
    }
}

/// Everything an evaluator may read.
pub struct Context<'a> {
    pub file: &'a ProfileFile,
    /// The validated profile at this dimension; ids that only read `α` and
    /// `m` run even when it is invalid.
    pub profile: Result<ExponentProfile, DtlError>,
    pub work_cap: u64,
}

impl<'a> Context<'a> {
    pub fn new(file: &'a ProfileFile, n: usize, work_cap: u64) -> Self {
        let profile = file.profile(n).map_err(|e| match e {
            HarnessError::Core(d) => d,
            other => DtlError::BadExponent(other.to_string()),
        });
        Self { file, profile, work_cap }
    }

    pub fn pr(&self) -> HarnessResult<&ExponentProfile> {
        self.profile.as_ref().map_err(|e| e.clone().into())
    }
}

type Evaluator = fn(&Context<'_>, &TrialInputs) -> HarnessResult<Evaluation>;

pub struct Entry {
    pub id: &'static str,
    /// Constant 1: every ratio must stay below `1 + 1e-12`.
    pub exact: bool,
    pub summary: &'static str,
    pub eval: Evaluator,
}

pub const EXACT_TOL: f64 = 1e-12;

pub static REGISTRY: &[Entry] = &[
    Entry { id: "morrey-nesting", exact: true, summary: "‖f‖_{p2,p0} ≤ ‖f‖_{p1,p0} for p2 ≤ p1 ≤ p0", eval: morrey_nesting },
    Entry { id: "morrey-identity", exact: true, summary: "‖f‖_{p0,p0} = ‖f‖_{L^p0}", eval: morrey_identity },
    Entry { id: "eq1.4-left", exact: true, summary: "‖f‖_{p,n/α} ≤ modified Morrey norm", eval: eq14_left },
    Entry { id: "eq1.4-right", exact: false, summary: "modified Morrey norm ≲ ‖f‖_{q,n/α}", eval: eq14_right },
    Entry { id: "discretization", exact: false, summary: "kernel operator ≲ enlarged dyadic majorant, pointwise", eval: discretization },
    Entry { id: "sparse-domination", exact: false, summary: "dyadic operator ≲ sparse operator, pointwise", eval: sparse_domination },
    Entry { id: "thm2.1a", exact: false, summary: "sparse operator into M_μ^{p,p0}, A0 = K|Q|^m(μ/|Q|)^{1/p}", eval: thm21a },
    Entry { id: "thm2.1b", exact: false, summary: "sparse operator into M_μ^{p,p0}, bump A0", eval: thm21b },
    Entry { id: "thm2.3", exact: false, summary: "sparse operator into M_μ^{p,p0} for p ≤ 1", eval: thm23 },
    Entry { id: "lemma2.2a", exact: false, summary: "sparse multilinear embedding, A0 over the family", eval: lemma22a },
    Entry { id: "lemma2.2b", exact: false, summary: "sparse multilinear embedding, bump A0", eval: lemma22b },
    Entry { id: "thm2.4", exact: false, summary: "multilinear embedding with g dμ, A0 = sup C_Q", eval: thm24 },
    Entry { id: "lemma2.5", exact: false, summary: "multilinear embedding on D|_Q, sparse-family A0", eval: lemma25 },
    Entry { id: "thm2.6", exact: false, summary: "dyadic K-operator into M_μ^{p,p0}, A0 = sup C_Q", eval: thm26 },
    Entry { id: "thm1.1a", exact: false, summary: "trace into M_μ^{q,q0}, weight A0", eval: thm11a },
    Entry { id: "thm1.1b", exact: false, summary: "trace into M_μ^{q,q0}, bump A0", eval: thm11b },
    Entry { id: "thm1.2a", exact: false, summary: "trace into M_μ^{q,q0} for p ≤ 1", eval: thm12a },
    Entry { id: "thm1.2b", exact: false, summary: "trace into M_μ^{q,q0}, testing A0", eval: thm12b },
    Entry { id: "hedberg-pointwise", exact: false, summary: "I_α ≲ I_β^{1/θ} when the product Morrey norm is 1", eval: hedberg },
    Entry { id: "eq4.1", exact: true, summary: "weight A0^{1/θ} ≤ testing A0^{1/θ}", eval: eq41 },
    Entry { id: "adams-identity", exact: true, summary: "‖μ‖_{n−βp}^{1/q} = weight A0^{1/θ}", eval: adams_identity },
    Entry { id: "thm4.1", exact: false, summary: "trace into M_μ^{q,q0}, Adams A0", eval: thm41 },
    Entry { id: "packing-sparse", exact: true, summary: "|S| ≤ 2|E(S)| on stopping families", eval: packing_sparse },
    Entry { id: "packing-corona", exact: true, summary: "ν(F) ≤ 2ν(E(F)) on principal cubes", eval: packing_corona },
    Entry { id: "stopping-parent", exact: true, summary: "⨍_Q h ≤ 2⨍_{π(Q)} h", eval: stopping_parent_bound },
];

pub fn lookup(id: &str) -> HarnessResult<&'static Entry> {
    REGISTRY.iter().find(|e| e.id == id).ok_or_else(|| HarnessError::RegistryMiss(id.to_string()))
}

pub fn ids() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|e| e.id)
}

fn aggs(inp: &TrialInputs) -> Vec<TreeAggregate> {
    inp.fields.iter().map(TreeAggregate::of_field).collect()
}

fn canonical(pr: &ExponentProfile) -> KernelWeight {
    KernelWeight::canonical(pr.alpha(), pr.m())
}

fn pointwise(lhs: &LeafField, rhs: &LeafField) -> Evaluation {
    let mut best = Evaluation::new(0.0, 0.0);
    for (l, r) in lhs.values().iter().zip(rhs.values()) {
        let e = Evaluation::new(*l, *r);
        if e.ratio > best.ratio || best.ratio.is_nan() {
            best = e;
        }
    }
    best
}

fn product_lebesgue(fields: &[LeafField], p_vec: &[f64]) -> HarnessResult<f64> {
    let mut v = 1.0;
    for (f, p) in fields.iter().zip(p_vec) {
        v *= lebesgue_norm(f, *p, None)?;
    }
    Ok(v)
}

fn a0(inp: &TrialInputs, pr: &ExponentProfile, form: A0Form) -> HarnessResult<f64> {
    Ok(a0_constant(&inp.mu, &A0Exponents::from(pr), form, None)?.value)
}

fn a_infinity(mu: &LeafMeasure) -> HarnessResult<(f64, bool)> {
    match mu.density() {
        Some(d) => {
            let v = ap_characteristic(d, ApExponent::Infinity { p_star: DEFAULT_P_STAR })?.value;
            Ok((v, v.is_finite()))
        }
        None => Ok((f64::INFINITY, false)),
    }
}

fn p_hyp(e: Evaluation, pr: &ExponentProfile, want_above_one: bool) -> Evaluation {
    let p = pr.p();
    if want_above_one {
        e.with("p>1", p, p > 1.0)
    } else {
        e.with("p<=1", p, p <= 1.0)
    }
}

fn morrey_nesting(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let (p, p0) = (ctx.file.p(), ctx.file.p0);
    let NestingExponents { p1, p2, p0 } =
        ctx.file.nesting.unwrap_or(NestingExponents { p1: 0.5 * (p + p0), p2: p, p0 });
    let f = &inp.fields[0];
    Ok(Evaluation::new(morrey_norm(f, p2, p0)?.value, morrey_norm(f, p1, p0)?.value))
}

fn morrey_identity(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let p0 = ctx.file.p0;
    let f = &inp.fields[0];
    Ok(Evaluation::identity(morrey_norm(f, p0, p0)?.value, lebesgue_norm(f, p0, None)?))
}

fn eq14_left(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let s = ctx.file.scalar();
    let n = inp.root.dim() as f64;
    let f = &inp.fields[0];
    Ok(Evaluation::new(morrey_norm(f, s.p, n / s.alpha)?.value, modified_morrey_norm(f, s.p, s.alpha)?.value))
}

fn eq14_right(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let s = ctx.file.scalar();
    let n = inp.root.dim() as f64;
    let q = s.q.unwrap_or(n / s.alpha);
    if !(q > s.p && q <= n / s.alpha * (1.0 + 1e-12)) {
        return Err(DtlError::BadExponent(format!("need p < q ≤ n/α, got p={}, q={q}", s.p)).into());
    }
    let f = &inp.fields[0];
    Ok(Evaluation::new(modified_morrey_norm(f, s.p, s.alpha)?.value, morrey_norm(f, q, n / s.alpha)?.value))
}

fn discretization(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let alpha = ctx.file.alpha;
    let lhs = kernel_integral(&inp.fields, alpha, ctx.work_cap as u128)?;
    let rhs = discretization_majorant(&aggs(inp), alpha)?;
    Ok(pointwise(&lhs, &rhs))
}

fn sparse_domination(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let a = aggs(inp);
    let dom = sparse_dominate(&a, ctx.file.alpha)?;
    let k = KernelWeight::canonical(ctx.file.alpha, a.len());
    let full = dyadic_integral_operator(&a, &k)?;
    let sparse = sparse_integral_operator(&a, &k, dom.family.cubes())?;
    let leaf = dom.witness_leaf;
    let mut e = Evaluation::new(full.value(leaf), sparse.value(leaf));
    e.ratio = dom.constant;
    Ok(e)
}

/// `‖𝕴_K^𝒮 f⃗‖_{M_μ^{p,p₀}} / (A₀ ‖f⃗‖)` with `𝒮` the stopping family of `f⃗`.
fn sparse_trace(ctx: &Context<'_>, inp: &TrialInputs, form: A0Form) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    let a = aggs(inp);
    let fam = build_sparse_family(&a, inp.root.root())?;
    let op = sparse_integral_operator(&a, &canonical(pr), fam.cubes())?;
    let lhs = radon_morrey_norm(&op, pr.p(), pr.p0(), &inp.mu)?.value;
    let rhs = a0(inp, pr, form)? * product_morrey_for(&inp.fields, pr)?.value;
    Ok(Evaluation::new(lhs, rhs))
}

fn thm21a(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let (ainf, ok) = a_infinity(&inp.mu)?;
    Ok(p_hyp(sparse_trace(ctx, inp, A0Form::SparseA)?, ctx.pr()?, true).with("a-infinity", ainf, ok))
}

fn thm21b(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    Ok(p_hyp(sparse_trace(ctx, inp, A0Form::SparseB)?, ctx.pr()?, true))
}

fn thm23(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    Ok(p_hyp(sparse_trace(ctx, inp, A0Form::SparseA)?, ctx.pr()?, false))
}

/// `Σ_{S∈𝒮} K(S) ∏∫_S f_i dx ∫_S g dμ` against `A₀ ∏‖f_i‖_{p_i} ‖g‖_{L^{p'}(μ)}`.
fn sparse_embedding(ctx: &Context<'_>, inp: &TrialInputs, bump: bool) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    if pr.p() <= 1.0 {
        return Err(DtlError::BadExponent("the embedding pairs g with L^{p'}(μ), so p > 1".into()).into());
    }
    let a = aggs(inp);
    let fam = build_sparse_family(&a, inp.root.root())?;
    let k = canonical(pr);
    let gmu = TreeAggregate::of_weighted(&inp.g, 1.0, &inp.mu)?;
    let lhs: f64 = fam
        .cubes()
        .iter()
        .map(|&s| k.at(s) * a.iter().map(|x| x.mass(s)).product::<f64>() * gmu.mass(s))
        .sum();
    let pp = conjugate(pr.p());
    let mut sigmas = vec![LeafMeasure::lebesgue(inp.root); pr.m()];
    sigmas.push(inp.mu.clone());
    let mut exps = pr.p_vec().to_vec();
    exps.push(pp);
    let r = if bump { Some(pr.r().ok_or_else(|| DtlError::BadExponent("bump form needs r".into()))?) } else { None };
    let a0 = embedding_constant(fam.cubes(), &k, &sigmas, &exps, r)?.value;
    let rhs = a0 * product_lebesgue(&inp.fields, pr.p_vec())? * lebesgue_norm(&inp.g, pp, Some(&inp.mu))?;
    let e = Evaluation::new(lhs, rhs);
    if bump {
        Ok(e)
    } else {
        let (ainf, ok) = a_infinity(&inp.mu)?;
        Ok(e.with("a-infinity", ainf, ok))
    }
}

fn lemma22a(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    sparse_embedding(ctx, inp, false)
}

fn lemma22b(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    sparse_embedding(ctx, inp, true)
}

/// `sup_Q C_Q`, each `C_Q` the larger of the greedy family and the given
/// family restricted to `Q`; zero-mass cubes are skipped.
pub fn cq_sup(
    mu: &TreeAggregate,
    kernel: &KernelWeight,
    m: usize,
    p: f64,
    family: &[CubeAddr],
) -> HarnessResult<(f64, CubeAddr)> {
    let root = mu.root();
    let mut best = (0.0, root.root());
    for q in root.cubes() {
        if mu.mass(q) <= 0.0 {
            continue;
        }
        let g = cq_constant(mu, kernel, m, p, q, CqMode::Greedy)?.value;
        let s = cq_constant(mu, kernel, m, p, q, CqMode::Given(family))?.value;
        let v = g.max(s);
        if v > best.0 {
            best = (v, q);
        }
    }
    Ok(best)
}

fn thm24(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    if pr.p() <= 1.0 {
        return Err(DtlError::BadExponent("needs p > 1".into()).into());
    }
    let a = aggs(inp);
    let k = canonical(pr);
    let gmu = TreeAggregate::of_weighted(&inp.g, 1.0, &inp.mu)?;
    let lhs: f64 = inp
        .root
        .cubes()
        .map(|q| k.at(q) * a.iter().map(|x| x.mass(q)).product::<f64>() * gmu.mass(q))
        .sum();
    let fam = build_sparse_family(&a, inp.root.root())?;
    let (a0, _) = cq_sup(&TreeAggregate::of_measure(&inp.mu), &k, pr.m(), pr.p(), fam.cubes())?;
    let pp = conjugate(pr.p());
    let rhs = a0 * product_lebesgue(&inp.fields, pr.p_vec())? * lebesgue_norm(&inp.g, pp, Some(&inp.mu))?;
    Ok(Evaluation::new(lhs, rhs))
}

fn lemma25(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    if pr.p() <= 1.0 {
        return Err(DtlError::BadExponent("needs p > 1".into()).into());
    }
    let root = inp.root;
    let a = aggs(inp);
    let k = canonical(pr);
    let q = root.root();
    let lhs: f64 = root.cubes().map(|c| k.at(c) * a.iter().map(|x| x.mass(c)).product::<f64>()).sum();
    let t = subtree_kernel_sums(&root, &k, pr.m(), None, q);
    let (p, pp) = (pr.p(), conjugate(pr.p()));
    let w = |s: CubeAddr| (s.volume().powf(-1.0 / p) * t[root.position(s)]).powf(pp);
    let fam = build_sparse_family(&a, q)?;
    let greedy = sparse_family_sup(&root, q, w, FamilySearch::Greedy)?.0;
    let given = sparse_family_sup(&root, q, w, FamilySearch::Given(fam.cubes()))?.0;
    let a0 = greedy.max(given).powf(1.0 / pp);
    Ok(Evaluation::new(lhs, a0 * product_lebesgue(&inp.fields, pr.p_vec())?))
}

fn thm26(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    if pr.p() <= 1.0 {
        return Err(DtlError::BadExponent("needs p > 1".into()).into());
    }
    let a = aggs(inp);
    let k = canonical(pr);
    let op = dyadic_integral_operator(&a, &k)?;
    let lhs = radon_morrey_norm(&op, pr.p(), pr.p0(), &inp.mu)?.value;
    let fam = build_sparse_family(&a, inp.root.root())?;
    let (a0, _) = cq_sup(&TreeAggregate::of_measure(&inp.mu), &k, pr.m(), pr.p(), fam.cubes())?;
    Ok(Evaluation::new(lhs, a0 * product_morrey_for(&inp.fields, pr)?.value))
}

/// `‖𝕴_α^𝒟 f⃗‖_{M_μ^{q,q₀}} / (A₀^{1/θ} ‖f⃗‖_{M^{P⃗,p₀}})`.
fn trace(ctx: &Context<'_>, inp: &TrialInputs, a0: f64) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    let op = dyadic_integral_operator(&aggs(inp), &canonical(pr))?;
    let lhs = radon_morrey_norm(&op, pr.q(), pr.q0(), &inp.mu)?.value;
    let rhs = a0.powf(1.0 / pr.theta()) * product_morrey_for(&inp.fields, pr)?.value;
    Ok(Evaluation::new(lhs, rhs))
}

fn thm11a(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let a0 = a0(inp, ctx.pr()?, A0Form::WeightA)?;
    let (ainf, ok) = a_infinity(&inp.mu)?;
    Ok(p_hyp(trace(ctx, inp, a0)?, ctx.pr()?, true).with("a-infinity", ainf, ok))
}

fn thm11b(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let a0 = a0(inp, ctx.pr()?, A0Form::BumpB)?;
    Ok(p_hyp(trace(ctx, inp, a0)?, ctx.pr()?, true))
}

fn thm12a(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let a0 = a0(inp, ctx.pr()?, A0Form::WeightA)?;
    Ok(p_hyp(trace(ctx, inp, a0)?, ctx.pr()?, false))
}

fn thm12b(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    let a0 = ks_testing_constant(&TreeAggregate::of_measure(&inp.mu), pr.beta(), pr.p())?.value;
    trace(ctx, inp, a0)
}

fn hedberg(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    let norm = product_morrey_for(&inp.fields, pr)?.value;
    if norm == 0.0 {
        return Ok(Evaluation::new(0.0, 0.0));
    }
    let mut fields = inp.fields.clone();
    fields[0] = fields[0].scaled(1.0 / norm)?;
    let a: Vec<TreeAggregate> = fields.iter().map(TreeAggregate::of_field).collect();
    let ia = dyadic_integral_operator(&a, &KernelWeight::canonical(pr.alpha(), pr.m()))?;
    let ib = dyadic_integral_operator(&a, &KernelWeight::canonical(pr.beta(), pr.m()))?;
    Ok(pointwise(&ia, &ib.powf(1.0 / pr.theta())))
}

fn weight_a_root(inp: &TrialInputs, pr: &ExponentProfile) -> HarnessResult<f64> {
    Ok(a0(inp, pr, A0Form::WeightA)?.powf(1.0 / pr.theta()))
}

fn eq41(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    let ks = ks_testing_constant(&TreeAggregate::of_measure(&inp.mu), pr.beta(), pr.p())?.value;
    Ok(Evaluation::new(weight_a_root(inp, pr)?, ks.powf(1.0 / pr.theta())))
}

fn adams_of(inp: &TrialInputs, pr: &ExponentProfile) -> HarnessResult<f64> {
    let s = inp.root.dim() as f64 - pr.beta() * pr.p();
    Ok(adams_constant(&TreeAggregate::of_measure(&inp.mu), s)?.value.powf(1.0 / pr.q()))
}

fn adams_identity(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    Ok(Evaluation::identity(adams_of(inp, pr)?, weight_a_root(inp, pr)?))
}

fn thm41(ctx: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let pr = ctx.pr()?;
    let e = trace(ctx, inp, 1.0)?;
    let rhs = e.rhs * adams_of(inp, pr)?;
    Ok(Evaluation::new(e.lhs, rhs).with("beta<alpha", pr.alpha() - pr.beta(), pr.beta() < pr.alpha()))
}

fn packing_sparse(_: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let fam = build_sparse_family(&aggs(inp), inp.root.root())?;
    let check = verify_sparse(&inp.root, fam.cubes())?;
    let mut best = Evaluation::new(0.0, 0.0);
    for set in &check.sets {
        let e = Evaluation::new(set.cube_units as f64, 2.0 * set.units as f64);
        if e.ratio > best.ratio {
            best = e;
        }
    }
    Ok(best)
}

fn forests(inp: &TrialInputs) -> HarnessResult<Vec<CoronaForest>> {
    let top = inp.root.root();
    let mut out = inp
        .fields
        .iter()
        .map(|f| build_principal_cubes(f, None, top))
        .collect::<Result<Vec<_>, _>>()?;
    if inp.mu.total_mass() > 0.0 {
        out.push(build_principal_cubes(&inp.g, Some(&inp.mu), top)?);
    }
    Ok(out)
}

fn packing_corona(_: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let mut best = Evaluation::new(0.0, 0.0);
    for forest in forests(inp)? {
        for node in forest.nodes() {
            let f = node.cube;
            let e = Evaluation::new(forest.nu_mass(f), 2.0 * forest.exceptional_nu(&f)?);
            if e.ratio > best.ratio {
                best = e;
            }
        }
    }
    Ok(best)
}

fn stopping_parent_bound(_: &Context<'_>, inp: &TrialInputs) -> HarnessResult<Evaluation> {
    let mut best = Evaluation::new(0.0, 0.0);
    for forest in forests(inp)? {
        for q in inp.root.cubes() {
            let pi = stopping_parent(&forest, q)?;
            if let Some(a) = forest.average(q) {
                let b = forest.average(pi).unwrap_or(0.0);
                let e = Evaluation::new(a, 2.0 * b);
                if e.ratio > best.ratio {
                    best = e;
                }
            }
        }
    }
    Ok(best)
}
