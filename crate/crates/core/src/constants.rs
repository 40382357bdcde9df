//! Testing constants, weight characteristics and exponent relations.

use serde::Serialize;

use crate::decompositions::SparseCertifier;
use crate::error::{DtlError, Result};
use crate::grid::{AggregateKind, CubeAddr, LeafField, LeafMeasure, RootSpec, TreeAggregate};
use crate::norms::{conjugate, testing_sup, volume_pow, ExponentProfile};
use crate::operators::{localized_maximal_integral, side_pow, KernelWeight};
use crate::scan::{sup_over, Sup};

/// Default exponent standing in for `p = ∞` in the `A_∞` estimate.
pub const DEFAULT_P_STAR: f64 = 64.0;

/// Largest `𝒟|_Q` accepted by exhaustive family enumeration.
pub const EXHAUSTIVE_MAX_CUBES: usize = 15;

/// How a reported constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ExactScan,
    Given,
    Greedy,
    Exhaustive,
    ClosedFormBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantReport {
    pub name: String,
    pub value: f64,
    /// One cube for scans; the optimizing family for family searches.
    pub witness: Vec<CubeAddr>,
    pub mode: Mode,
    /// Exponents and flags the value depends on.
    pub parameters: Vec<(String, f64)>,
    /// Closed-form bounds hold up to this factor.
    pub bound_factor: Option<f64>,
}

impl ConstantReport {
    fn scan(name: &str, sup: Sup, parameters: Vec<(&str, f64)>) -> Self {
        Self {
            name: name.to_string(),
            value: sup.value,
            witness: vec![sup.witness],
            mode: Mode::ExactScan,
            parameters: parameters.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            bound_factor: None,
        }
    }
}

/// `θ = (n−βp₀)/(n−αp₀)`, `q = θp`, `q₀ = θp₀`.
pub fn hedberg_exponents(
    m: usize,
    n: usize,
    alpha: f64,
    beta: f64,
    p: f64,
    p0: f64,
) -> Result<(f64, f64, f64)> {
    let n = n as f64;
    let mn = m as f64 * n;
    if !(beta > 0.0 && beta <= alpha && alpha < mn) {
        return Err(DtlError::BadExponent(format!("need 0 < β ≤ α < mn, got β={beta}, α={alpha}")));
    }
    if !(p > 0.0 && p <= p0 && p0.is_finite()) {
        return Err(DtlError::BadExponent(format!("need 0 < p ≤ p0, got p={p}, p0={p0}")));
    }
    let gap = n - alpha * p0;
    if gap <= 1e-12 {
        return Err(DtlError::BadExponent(format!("need p0 < n/α, got p0={p0}")));
    }
    let theta = (n - beta * p0) / gap;
    Ok((theta, theta * p, theta * p0))
}

/// `sup_Q μ(Q)/ℓ_Q^β`.
pub fn adams_constant(mu: &TreeAggregate, beta: f64) -> Result<ConstantReport> {
    let root = mu.root();
    let n = root.dim() as f64;
    if !(beta > 0.0 && beta <= n) {
        return Err(DtlError::BadExponent(format!("beta {beta} outside (0, {n}]")));
    }
    let sup = sup_over(root.cubes(), root.root(), |q| mu.mass(q) / side_pow(q.level(), beta));
    Ok(ConstantReport::scan("adams", sup, vec![("beta", beta)]))
}

/// `sup_Q ((M_β[μ1_Q])^{p'}(Q)/μ(Q))^{1/p'}`.
pub fn ks_testing_constant(mu: &TreeAggregate, beta: f64, p: f64) -> Result<ConstantReport> {
    let n = mu.root().dim() as f64;
    if !(beta > 0.0 && beta < n) {
        return Err(DtlError::BadExponent(format!("beta {beta} outside (0, {n})")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(DtlError::BadExponent(format!("p must exceed 1, got {p}")));
    }
    Ok(ConstantReport::scan("ks-testing", testing_sup(mu, beta, p), vec![("beta", beta), ("p", p)]))
}

/// The four `A₀` functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum A0Form {
    /// `sup ℓ^β (μ(Q)/|Q|)^{1/p}`.
    WeightA,
    /// `sup ℓ^β (μ^r(Q)/|Q|)^{1/(rp)}`.
    BumpB,
    /// `sup K(Q)|Q|^m (μ(Q)/|Q|)^{1/p}`.
    SparseA,
    /// `sup K(Q)|Q|^m (μ^r(Q)/|Q|)^{1/(rp)}`.
    SparseB,
}

impl A0Form {
    pub fn name(&self) -> &'static str {
        match self {
            Self::WeightA => "a0-weight-a",
            Self::BumpB => "a0-bump-b",
            Self::SparseA => "a0-sparse-a",
            Self::SparseB => "a0-sparse-b",
        }
    }
}

/// Exponents read by [`a0_constant`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A0Exponents {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub r: Option<f64>,
}

impl From<&ExponentProfile> for A0Exponents {
    fn from(pr: &ExponentProfile) -> Self {
        Self { m: pr.m(), alpha: pr.alpha(), beta: pr.beta(), p: pr.p(), r: pr.r() }
    }
}

/// `A₀` for `μ`; the sparse forms default to the canonical kernel
/// `ℓ^{α−mn}`.
pub fn a0_constant(
    mu: &LeafMeasure,
    ex: &A0Exponents,
    form: A0Form,
    kernel: Option<&KernelWeight>,
) -> Result<ConstantReport> {
    let root = mu.root();
    let A0Exponents { m, alpha, beta, p, r } = *ex;
    if !(p > 0.0 && p.is_finite()) {
        return Err(DtlError::BadExponent(format!("p must be positive, got {p}")));
    }
    let bump = matches!(form, A0Form::BumpB | A0Form::SparseB);
    let (agg, exponent, r) = if bump {
        let r = r
            .filter(|r| *r > 1.0 && r.is_finite())
            .ok_or_else(|| DtlError::BadExponent("bump forms need r > 1".into()))?;
        (TreeAggregate::of_measure(&mu.power(r)?), 1.0 / (r * p), r)
    } else {
        (TreeAggregate::of_measure(mu), 1.0 / p, 1.0)
    };
    let canonical = KernelWeight::canonical(alpha, m);
    let kernel = kernel.unwrap_or(&canonical);
    kernel.check(&root)?;
    let mf = m as f64;
    let sup = sup_over(root.cubes(), root.root(), |q| {
        let density = (agg.mass(q) / q.volume()).powf(exponent);
        let scale = match form {
            A0Form::WeightA | A0Form::BumpB => side_pow(q.level(), beta),
            A0Form::SparseA | A0Form::SparseB => kernel.at(q) * volume_pow(q, mf),
        };
        scale * density
    });
    let mut params = vec![("beta", beta), ("p", p)];
    if bump {
        params.push(("r", r));
    }
    Ok(ConstantReport::scan(form.name(), sup, params))
}

/// `sup_{S∈𝒮} K(S)|S|^{k−Σ1/p_i} ∏ (σ_i(S)/|S|)^{1/p_i'}` for `k` functions
/// integrated against `σ_1..σ_k`; with `r`, `σ_i` is replaced by `σ_i^r` and
/// the exponents by `1/(r p_i')`.
pub fn embedding_constant(
    family: &[CubeAddr],
    kernel: &KernelWeight,
    sigmas: &[LeafMeasure],
    p_vec: &[f64],
    r: Option<f64>,
) -> Result<ConstantReport> {
    let first = sigmas.first().ok_or(DtlError::ShapeMismatch { expected: 1, got: 0 })?;
    let root = first.root();
    if sigmas.len() != p_vec.len() {
        return Err(DtlError::ShapeMismatch { expected: sigmas.len(), got: p_vec.len() });
    }
    if sigmas.iter().any(|s| s.root() != root) {
        return Err(DtlError::RootMismatch);
    }
    kernel.check(&root)?;
    let rr = r.unwrap_or(1.0);
    let aggs = sigmas
        .iter()
        .map(|s| Ok(TreeAggregate::of_measure(&if r.is_some() { s.power(rr)? } else { s.clone() })))
        .collect::<Result<Vec<_>>>()?;
    let k = sigmas.len() as f64;
    let inv_sum: f64 = p_vec.iter().map(|p| 1.0 / p).sum();
    let exps: Vec<f64> = p_vec.iter().map(|&p| 1.0 / (rr * conjugate(p))).collect();
    for &s in family {
        root.check(s)?;
    }
    let sup = sup_over(family.iter().copied(), root.root(), |s| {
        let vol = s.volume();
        let mut v = kernel.at(s) * volume_pow(s, k - inv_sum);
        for (a, e) in aggs.iter().zip(&exps) {
            v *= (a.mass(s) / vol).powf(*e);
        }
        v
    });
    let mut params: Vec<(&str, f64)> = vec![("functions", k)];
    if let Some(r) = r {
        params.push(("r", r));
    }
    Ok(ConstantReport::scan(if r.is_some() { "embedding-b" } else { "embedding-a" }, sup, params))
}

/// Strategy for maximizing a nonnegative additive weight over certified
/// sparse families inside a cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySearch<'a> {
    Given(&'a [CubeAddr]),
    Greedy,
    Exhaustive,
}

/// `sup_𝒮 Σ_{S∈𝒮|_Q} w(S)` over canonically certified sparse families.
///
/// Greedy inserts cubes in decreasing weight and keeps each one the
/// certificate accepts; since certified families are closed under taking
/// subfamilies, a rejected cube can never become admissible later. Returned
/// sums always add the members in canonical order, so equal families give
/// bit-identical values whichever search found them.
pub fn sparse_family_sup(
    root: &RootSpec,
    q: CubeAddr,
    weight: impl Fn(CubeAddr) -> f64,
    search: FamilySearch<'_>,
) -> Result<(f64, Vec<CubeAddr>)> {
    root.check(q)?;
    let subtree: Vec<CubeAddr> = (q.level()..=root.depth())
        .flat_map(|j| {
            let shift = root.dim() as u32 * (j - q.level());
            let start = q.code() << shift;
            (start..start + (1u64 << shift)).map(move |c| CubeAddr::from_code(q.dim(), j, c))
        })
        .collect();
    let canonical_sum = |fam: &[CubeAddr]| -> f64 {
        let mut sorted = fam.to_vec();
        sorted.sort();
        sorted.iter().fold(0.0, |acc, &s| acc + weight(s))
    };
    match search {
        FamilySearch::Given(family) => {
            let mut inside: Vec<CubeAddr> = family.iter().copied().filter(|s| q.contains(s)).collect();
            inside.sort();
            inside.dedup();
            Ok((canonical_sum(&inside), inside))
        }
        FamilySearch::Greedy => {
            let mut scored: Vec<(CubeAddr, f64)> = subtree.iter().map(|&s| (s, weight(s))).collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut cert = SparseCertifier::new(*root);
            for &(s, _) in &scored {
                cert.insert(s);
            }
            let members = cert.members();
            Ok((canonical_sum(&members), members))
        }
        FamilySearch::Exhaustive => {
            if subtree.len() > EXHAUSTIVE_MAX_CUBES {
                return Err(DtlError::ComplexityRefusal {
                    work: 1u128 << subtree.len().min(127),
                    cap: 1u128 << EXHAUSTIVE_MAX_CUBES,
                });
            }
            let mut cands = subtree;
            cands.sort();
            let w: Vec<f64> = cands.iter().map(|&s| weight(s)).collect();
            let mut rest = vec![0.0; w.len() + 1];
            for i in (0..w.len()).rev() {
                rest[i] = rest[i + 1] + w[i];
            }
            let mut search = Exhaustive {
                cands: &cands,
                w: &w,
                rest: &rest,
                cert: SparseCertifier::new(*root),
                chosen: Vec::new(),
                best: (-1.0, Vec::new()),
            };
            search.run(0, 0.0);
            let (value, members) = search.best;
            Ok((value.max(0.0), members))
        }
    }
}

struct Exhaustive<'a> {
    cands: &'a [CubeAddr],
    w: &'a [f64],
    rest: &'a [f64],
    cert: SparseCertifier,
    chosen: Vec<CubeAddr>,
    best: (f64, Vec<CubeAddr>),
}

impl Exhaustive<'_> {
    // Members are added in canonical order, so `acc` is the canonical sum.
    fn run(&mut self, i: usize, acc: f64) {
        if (acc + self.rest[i]) * (1.0 + 1e-9) < self.best.0 {
            return;
        }
        if i == self.cands.len() {
            if acc > self.best.0 {
                self.best = (acc, self.chosen.clone());
            }
            return;
        }
        let c = self.cands[i];
        if self.cert.insert(c) {
            self.chosen.push(c);
            self.run(i + 1, acc + self.w[i]);
            self.chosen.pop();
            self.cert.remove(c);
        }
        self.run(i + 1, acc);
    }
}

/// How [`cq_constant`] evaluates the sup over sparse families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CqMode<'a> {
    Given(&'a [CubeAddr]),
    Greedy,
    Exhaustive,
    /// `(M_α[μ1_Q]^{p'}(Q)/μ(Q))^{1/p'}` for the canonical kernel `ℓ^{α−mn}`;
    /// `bound_factor` carries the constant by which it dominates `C_Q`.
    Bound,
}

/// `T(S) = Σ_{Q'⊆S} K(Q')|Q'|^m ν(Q')` for every `S ⊆ Q`, with `ν(Q') = 1`
/// when `mu` is `None`; indexed by table position.
pub fn subtree_kernel_sums(
    root: &RootSpec,
    kernel: &KernelWeight,
    m: usize,
    mu: Option<&TreeAggregate>,
    q: CubeAddr,
) -> Vec<f64> {
    let mut t = vec![0.0; root.cube_count()];
    for j in (q.level()..=root.depth()).rev() {
        let shift = root.dim() as u32 * (j - q.level());
        let start = q.code() << shift;
        for code in start..start + (1u64 << shift) {
            let s = CubeAddr::from_code(root.dim(), j, code);
            let own = kernel.at(s) * volume_pow(s, m as f64) * mu.map_or(1.0, |a| a.mass(s));
            let kids: f64 = if j < root.depth() {
                s.children().map(|c| t[root.position(c)]).sum()
            } else {
                0.0
            };
            t[root.position(s)] = own + kids;
        }
    }
    t
}

/// `C_Q = μ(Q)^{−1/p'} sup_𝒮 (Σ_{S∈𝒮|_Q} (|S|^{−1/p} T(S))^{p'})^{1/p'}`.
pub fn cq_constant(
    mu: &TreeAggregate,
    kernel: &KernelWeight,
    m: usize,
    p: f64,
    q: CubeAddr,
    mode: CqMode<'_>,
) -> Result<ConstantReport> {
    let root = mu.root();
    root.check(q)?;
    kernel.check(&root)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(DtlError::BadExponent(format!("p must exceed 1, got {p}")));
    }
    let mass = mu.mass(q);
    if mass <= 0.0 {
        return Err(DtlError::ZeroMeasure);
    }
    let pp = conjugate(p);
    let params = vec![("p".to_string(), p), ("m".to_string(), m as f64)];
    if let CqMode::Bound = mode {
        let &KernelWeight::Canonical { alpha, .. } = kernel else {
            return Err(DtlError::BadExponent("bound mode needs the canonical kernel".into()));
        };
        let n = root.dim() as f64;
        if !(alpha > 0.0 && alpha < n) {
            return Err(DtlError::BadExponent(format!("bound mode needs 0 < α < n, got {alpha}")));
        }
        let value = (localized_maximal_integral(mu, alpha, pp, q) / mass).powf(1.0 / pp);
        return Ok(ConstantReport {
            name: "cq".into(),
            value,
            witness: vec![q],
            mode: Mode::ClosedFormBound,
            parameters: params,
            bound_factor: Some(2f64.powf(1.0 / pp) / (1.0 - (-alpha).exp2())),
        });
    }
    let t = subtree_kernel_sums(&root, kernel, m, Some(mu), q);
    let weight = |s: CubeAddr| (volume_pow(s, -1.0 / p) * t[root.position(s)]).powf(pp);
    let (search, tag) = match mode {
        CqMode::Given(f) => (FamilySearch::Given(f), Mode::Given),
        CqMode::Greedy => (FamilySearch::Greedy, Mode::Greedy),
        CqMode::Exhaustive => (FamilySearch::Exhaustive, Mode::Exhaustive),
        CqMode::Bound => unreachable!(),
    };
    let (sum, family) = sparse_family_sup(&root, q, weight, search)?;
    Ok(ConstantReport {
        name: "cq".into(),
        value: mass.powf(-1.0 / pp) * sum.powf(1.0 / pp),
        witness: family,
        mode: tag,
        parameters: params,
        bound_factor: None,
    })
}

/// Exponent for [`ap_characteristic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApExponent {
    Finite(f64),
    /// `[w]_{A_{p*}}`, an upper estimate of `[w]_{A_∞}`.
    Infinity { p_star: f64 },
}

/// `sup_Q (⨍_Q w)(⨍_Q w^{−1/(p−1)})^{p−1}`; infinite on cubes containing a
/// zero leaf.
pub fn ap_characteristic(w: &LeafField, exponent: ApExponent) -> Result<ConstantReport> {
    let (p, name) = match exponent {
        ApExponent::Finite(p) => (p, "ap"),
        ApExponent::Infinity { p_star } => (p_star, "a-infinity-estimate"),
    };
    if !(p > 1.0 && p.is_finite()) {
        return Err(DtlError::BadExponent(format!("p must exceed 1, got {p}")));
    }
    let root = w.root();
    let zeros: Vec<f64> = w.values().iter().map(|&v| if v == 0.0 { 1.0 } else { 0.0 }).collect();
    let zeros = TreeAggregate::from_leaf_masses(root, &zeros, AggregateKind::Field)?;
    let dual: Vec<f64> = w
        .values()
        .iter()
        .map(|&v| if v == 0.0 { 0.0 } else { v.powf(-1.0 / (p - 1.0)) })
        .collect();
    let dual = TreeAggregate::of_field(&LeafField::new(root, dual)?);
    let plain = TreeAggregate::of_field(w);
    let sup = sup_over(root.cubes(), root.root(), |q| {
        if zeros.mass(q) > 0.0 {
            return f64::INFINITY;
        }
        let v = q.volume();
        (plain.mass(q) / v) * (dual.mass(q) / v).powf(p - 1.0)
    });
    Ok(ConstantReport::scan(name, sup, vec![("p", p)]))
}

/// `Σ_{Q'⊋Q} K(Q')|Q'|^{m−1/p₀} / (K(Q)|Q|^{m−1/p₀})` over the ancestors
/// inside the tree.
pub fn condition_d_ratio(kernel: &KernelWeight, profile: &ExponentProfile, q: CubeAddr) -> f64 {
    let e = profile.m() as f64 - 1.0 / profile.p0();
    let term = |c: CubeAddr| kernel.at(c) * volume_pow(c, e);
    let above: f64 = q.ancestors().into_iter().map(term).sum();
    crate::scan::ratio(above, term(q))
}

/// `Σ_{d=1}^{level} 2^{−d(n/p₀−α)}`.
pub fn condition_d_geometric(n: usize, alpha: f64, p0: f64, level: u32) -> f64 {
    let gap = n as f64 / p0 - alpha;
    (1..=level).map(|d| (-(d as f64) * gap).exp2()).sum()
}

/// `2^{α−n/p₀}/(1−2^{α−n/p₀})`.
pub fn condition_d_bound(n: usize, alpha: f64, p0: f64) -> f64 {
    let r = (alpha - n as f64 / p0).exp2();
    r / (1.0 - r)
}
