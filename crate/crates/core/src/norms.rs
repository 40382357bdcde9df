//! Lebesgue, Morrey-type and testing-type functionals over the truncated tree.

use serde::Serialize;

use crate::constants::hedberg_exponents;
use crate::error::{DtlError, Result};
use crate::grid::{CubeAddr, LeafField, LeafMeasure, RootSpec, TreeAggregate};
use crate::operators::localized_maximal_integral;
use crate::scan::{sup_over, Sup};

/// Tolerance on `1/p = Σ 1/p_i`.
pub const HARMONIC_TOL: f64 = 1e-12;

/// All exponents of a multilinear trace estimate.
///
/// `p` is derived from `p_vec`; `theta`, `q` and `q0` are derived from the
/// rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentProfile {
    m: usize,
    n: usize,
    alpha: f64,
    beta: f64,
    p_vec: Vec<f64>,
    p: f64,
    p0: f64,
    r: Option<f64>,
    theta: f64,
    q: f64,
    q0: f64,
}

impl ExponentProfile {
    pub fn new(
        n: usize,
        alpha: f64,
        beta: f64,
        p_vec: Vec<f64>,
        p0: f64,
        r: Option<f64>,
    ) -> Result<Self> {
        let m = p_vec.len();
        if m == 0 || n == 0 {
            return Err(DtlError::BadExponent("need m ≥ 1 and n ≥ 1".into()));
        }
        if p_vec.iter().any(|&pi| !(pi > 1.0 && pi.is_finite())) {
            return Err(DtlError::BadExponent(format!("p_i must lie in (1,∞): {p_vec:?}")));
        }
        let inv: f64 = p_vec.iter().map(|pi| 1.0 / pi).sum();
        let p = 1.0 / inv;
        if let Some(r) = r {
            if !(r > 1.0 && r.is_finite()) {
                return Err(DtlError::BadExponent(format!("r must exceed 1, got {r}")));
            }
        }
        let (theta, q, q0) = hedberg_exponents(m, n, alpha, beta, p, p0)?;
        Ok(Self { m, n, alpha, beta, p_vec, p, p0, r, theta, q, q0 })
    }

    /// Same exponents on a grid of another dimension.
    pub fn with_dim(&self, n: usize) -> Result<Self> {
        Self::new(n, self.alpha, self.beta, self.p_vec.clone(), self.p0, self.r)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn p_vec(&self) -> &[f64] {
        &self.p_vec
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn p0(&self) -> f64 {
        self.p0
    }
    pub fn r(&self) -> Option<f64> {
        self.r
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn q0(&self) -> f64 {
        self.q0
    }

    /// Hölder conjugate of `p`; infinite when `p ≤ 1`.
    pub fn p_prime(&self) -> f64 {
        conjugate(self.p)
    }
}

/// `p/(p−1)`, infinite for `p ≤ 1`.
pub fn conjugate(p: f64) -> f64 {
    if p <= 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `|Q|^s`.
pub(crate) fn volume_pow(q: CubeAddr, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (-((q.level() as usize * q.dim()) as f64) * s).exp2()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DtlError::BadExponent(format!("{name} must be positive and finite, got {v}")))
    }
}

fn ordered(low: (&str, f64), high: (&str, f64)) -> Result<()> {
    positive(low.0, low.1)?;
    positive(high.0, high.1)?;
    if low.1 > high.1 {
        return Err(DtlError::BadExponent(format!(
            "need {} ≤ {}, got {} > {}",
            low.0, high.0, low.1, high.1
        )));
    }
    Ok(())
}

/// `(∫ f^p dν)^{1/p}` with `ν = dx` or `ν = μ`.
pub fn lebesgue_norm(f: &LeafField, p: f64, mu: Option<&LeafMeasure>) -> Result<f64> {
    positive("p", p)?;
    let masses = match mu {
        None => LeafMeasure::lebesgue(f.root()).weighted_masses(f, p)?,
        Some(mu) => mu.weighted_masses(f, p)?,
    };
    Ok(masses.iter().sum::<f64>().powf(1.0 / p))
}

/// `sup_Q |Q|^{1/p₀} (⨍_Q f^p)^{1/p}`.
pub fn morrey_norm(f: &LeafField, p: f64, p0: f64) -> Result<Sup> {
    ordered(("p", p), ("p0", p0))?;
    let root = f.root();
    let agg = TreeAggregate::of_power(f, p);
    Ok(sup_over(root.cubes(), root.root(), |q| {
        volume_pow(q, 1.0 / p0) * (agg.mass(q) / q.volume()).powf(1.0 / p)
    }))
}

/// `sup_Q |Q|^{1/p₀−1/p} ∏ (∫_Q f_i^{p_i})^{1/p_i}` with `1/p = Σ 1/p_i`.
pub fn product_morrey_norm(fields: &[LeafField], p_vec: &[f64], p0: f64) -> Result<Sup> {
    let root = shared_field_root(fields)?;
    if p_vec.len() != fields.len() {
        return Err(DtlError::ShapeMismatch { expected: fields.len(), got: p_vec.len() });
    }
    for &pi in p_vec {
        positive("p_i", pi)?;
    }
    let p = 1.0 / p_vec.iter().map(|pi| 1.0 / pi).sum::<f64>();
    ordered(("p", p), ("p0", p0))?;
    let aggs: Vec<TreeAggregate> =
        fields.iter().zip(p_vec).map(|(f, &pi)| TreeAggregate::of_power(f, pi)).collect();
    Ok(sup_over(root.cubes(), root.root(), |q| {
        let mut v = volume_pow(q, 1.0 / p0 - 1.0 / p);
        for (a, &pi) in aggs.iter().zip(p_vec) {
            v *= a.mass(q).powf(1.0 / pi);
        }
        v
    }))
}

pub fn product_morrey_for(fields: &[LeafField], profile: &ExponentProfile) -> Result<Sup> {
    product_morrey_norm(fields, profile.p_vec(), profile.p0())
}

/// `sup_Q |Q|^{1/q₀−1/q} (∫_Q g^q dμ)^{1/q}`.
pub fn radon_morrey_norm(g: &LeafField, q: f64, q0: f64, mu: &LeafMeasure) -> Result<Sup> {
    ordered(("q", q), ("q0", q0))?;
    let root = mu.root();
    let agg = TreeAggregate::of_weighted(g, q, mu)?;
    Ok(sup_over(root.cubes(), root.root(), |c| {
        volume_pow(c, 1.0 / q0 - 1.0 / q) * agg.mass(c).powf(1.0 / q)
    }))
}

/// `sup_Q (∫_Q (M_α[f^p 1_Q])^{p'} dx / ∫_Q f^p dx)^{1/p'}`; cubes where
/// `f` vanishes contribute 0.
pub fn modified_morrey_norm(f: &LeafField, p: f64, alpha: f64) -> Result<Sup> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(DtlError::BadExponent(format!("p must exceed 1, got {p}")));
    }
    let n = f.root().dim() as f64;
    if !(alpha > 0.0 && alpha < n) {
        return Err(DtlError::BadExponent(format!("alpha {alpha} outside (0, {n})")));
    }
    Ok(testing_sup(&TreeAggregate::of_power(f, p), alpha, p))
}

/// `sup_Q (∫_Q (M_β[μ1_Q])^{p'} dx / μ(Q))^{1/p'}` with `μ(Q) = 0` cubes
/// contributing 0.
pub(crate) fn testing_sup(mu: &TreeAggregate, beta: f64, p: f64) -> Sup {
    let root = mu.root();
    let pp = conjugate(p);
    sup_over(root.cubes(), root.root(), |q| {
        let mass = mu.mass(q);
        if mass == 0.0 {
            0.0
        } else {
            (localized_maximal_integral(mu, beta, pp, q) / mass).powf(1.0 / pp)
        }
    })
}

pub(crate) fn shared_field_root(fields: &[LeafField]) -> Result<RootSpec> {
    let first = fields.first().ok_or(DtlError::ShapeMismatch { expected: 1, got: 0 })?;
    let root = first.root();
    if fields.iter().any(|f| f.root() != root) {
        return Err(DtlError::RootMismatch);
    }
    Ok(root)
}
