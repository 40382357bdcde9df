//! Dyadic and kernel-form fractional operators, evaluated on every leaf.
//!
//! The dyadic operators all have the shape "combine, over the cubes that
//! contain a leaf, a per-cube quantity". They are computed in one root-to-leaf
//! pass that keeps a running value per cube of the current level.

use crate::error::{DtlError, Result};
use crate::grid::{enlarged_sum, CubeAddr, LeafField, LeafMeasure, RootSpec, TreeAggregate};

/// Default cap on kernel evaluations for [`kernel_integral`].
pub const DEFAULT_KERNEL_CAP: u128 = 100_000_000;

/// Cube weight `K(Q)`, depending on the level only.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelWeight {
    /// `K(Q) = ℓ_Q^{α−mn}`.
    Canonical { alpha: f64, m: usize },
    /// `K(Q) = table[level]`.
    Explicit(Vec<f64>),
}

impl KernelWeight {
    pub fn canonical(alpha: f64, m: usize) -> Self {
        Self::Canonical { alpha, m }
    }

    pub fn explicit(table: Vec<f64>) -> Result<Self> {
        if table.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(DtlError::BadExponent("kernel table must be finite and nonnegative".into()));
        }
        Ok(Self::Explicit(table))
    }

    pub fn at_level(&self, level: u32, n: usize) -> f64 {
        match self {
            Self::Canonical { alpha, m } => side_pow(level, alpha - (m * n) as f64),
            Self::Explicit(t) => t[level as usize],
        }
    }

    pub fn at(&self, q: CubeAddr) -> f64 {
        self.at_level(q.level(), q.dim())
    }

    pub(crate) fn check(&self, root: &RootSpec) -> Result<()> {
        if let Self::Explicit(t) = self {
            let need = root.depth() as usize + 1;
            if t.len() < need {
                return Err(DtlError::ShapeMismatch { expected: need, got: t.len() });
            }
        }
        Ok(())
    }
}

/// `ℓ^s` for a cube of the given level, i.e. `2^{-level·s}`.
pub fn side_pow(level: u32, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (-(level as f64) * s).exp2()
    }
}

pub(crate) fn shared_root(aggs: &[TreeAggregate]) -> Result<RootSpec> {
    let first = aggs.first().ok_or(DtlError::ShapeMismatch { expected: 1, got: 0 })?;
    let root = first.root();
    if aggs.iter().any(|a| a.root() != root) {
        return Err(DtlError::RootMismatch);
    }
    Ok(root)
}

/// Running combination of `per_cube(level, code)` along every root-to-leaf
/// chain; returns the leaf values in Morton order.
fn chain_pass(
    root: &RootSpec,
    mut per_cube: impl FnMut(u32, usize) -> f64,
    combine: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let n = root.dim();
    let mut cur = vec![per_cube(0, 0)];
    for k in 1..=root.depth() {
        let len = root.level_len(k);
        let mut next = Vec::with_capacity(len);
        for c in 0..len {
            next.push(combine(cur[c >> n], per_cube(k, c)));
        }
        cur = next;
    }
    cur
}

fn product_at(aggs: &[TreeAggregate], k: u32, c: usize) -> f64 {
    aggs.iter().map(|a| a.level(k)[c]).product()
}

/// `sup_{R∋x} ℓ_R^{α−n} μ(R ∩ Q)` at every leaf, with `Q` the root unless
/// `localize` is given.
pub fn fractional_maximal(
    mu: &TreeAggregate,
    alpha: f64,
    localize: Option<CubeAddr>,
) -> Result<LeafField> {
    let root = mu.root();
    let n = root.dim();
    if !(0.0..(n as f64)).contains(&alpha) {
        return Err(DtlError::BadExponent(format!("alpha {alpha} outside [0, {n})")));
    }
    if let Some(q) = localize {
        root.check(q)?;
    }
    let s = alpha - n as f64;
    let out = chain_pass(
        &root,
        |k, c| {
            let mass = match localize {
                None => mu.level(k)[c],
                Some(q) => {
                    let r = CubeAddr::from_code(n, k, c as u64);
                    if q.contains(&r) {
                        mu.level(k)[c]
                    } else if r.contains(&q) {
                        mu.mass(q)
                    } else {
                        0.0
                    }
                }
            };
            side_pow(k, s) * mass
        },
        f64::max,
    );
    Ok(LeafField::from_morton(root, &out))
}

/// `sup_{Q∋x} ℓ_Q^{α−mn} ∏ ∫_Q f_i`.
pub fn multilinear_maximal(fields: &[TreeAggregate], alpha: f64) -> Result<LeafField> {
    let root = shared_root(fields)?;
    let mn = (fields.len() * root.dim()) as f64;
    if !(0.0..mn).contains(&alpha) {
        return Err(DtlError::BadExponent(format!("alpha {alpha} outside [0, {mn})")));
    }
    let out = chain_pass(
        &root,
        |k, c| side_pow(k, alpha - mn) * product_at(fields, k, c),
        f64::max,
    );
    Ok(LeafField::from_morton(root, &out))
}

/// `Σ_{Q∋x} K(Q) ∏ ∫_Q f_i`, summed from the root down.
pub fn dyadic_integral_operator(fields: &[TreeAggregate], kernel: &KernelWeight) -> Result<LeafField> {
    let root = shared_root(fields)?;
    kernel.check(&root)?;
    let n = root.dim();
    let out = chain_pass(
        &root,
        |k, c| kernel.at_level(k, n) * product_at(fields, k, c),
        |a, b| a + b,
    );
    Ok(LeafField::from_morton(root, &out))
}

/// `Σ_{S∈𝒮, S∋x} K(S) ∏ ∫_S f_i`.
pub fn sparse_integral_operator(
    fields: &[TreeAggregate],
    kernel: &KernelWeight,
    family: &[CubeAddr],
) -> Result<LeafField> {
    let root = shared_root(fields)?;
    kernel.check(&root)?;
    let n = root.dim();
    let mut member = vec![false; root.cube_count()];
    for &s in family {
        root.check(s)?;
        member[root.position(s)] = true;
    }
    let out = chain_pass(
        &root,
        |k, c| {
            if member[root.level_offset(k) + c] {
                kernel.at_level(k, n) * product_at(fields, k, c)
            } else {
                0.0
            }
        },
        |a, b| a + b,
    );
    Ok(LeafField::from_morton(root, &out))
}

/// `Σ_{Q∋x} ℓ_Q^α ∏ (1/|Q|) ∫_{3Q∩root} f_i`, the majorant of the kernel
/// operator by enlarged dyadic averages.
pub fn discretization_majorant(fields: &[TreeAggregate], alpha: f64) -> Result<LeafField> {
    let root = shared_root(fields)?;
    let n = root.dim();
    let out = chain_pass(
        &root,
        |k, c| {
            let q = CubeAddr::from_code(n, k, c as u64);
            let vol = q.volume();
            let mut prod = side_pow(k, alpha);
            for a in fields {
                prod *= enlarged_sum(a, q).expect("cube from the tree") / vol;
            }
            prod
        },
        |a, b| a + b,
    );
    Ok(LeafField::from_morton(root, &out))
}

/// `sup_{Q∋x, μ(Q)>0} μ(Q)^{-1} ∫_Q g dμ`.
pub fn mu_maximal(g: &LeafField, mu: &LeafMeasure) -> Result<LeafField> {
    let root = mu.root();
    if g.root() != root {
        return Err(DtlError::RootMismatch);
    }
    let m = TreeAggregate::of_measure(mu);
    if m.total() <= 0.0 {
        return Err(DtlError::ZeroMeasure);
    }
    let gm = TreeAggregate::of_weighted(g, 1.0, mu)?;
    let out = chain_pass(
        &root,
        |k, c| {
            let mass = m.level(k)[c];
            if mass > 0.0 {
                gm.level(k)[c] / mass
            } else {
                0.0
            }
        },
        f64::max,
    );
    Ok(LeafField::from_morton(root, &out))
}

/// `∫_Q (M_β[μ1_Q])^s dx`.
///
/// On `Q` the localized maximal function only sees cubes `R ⊆ Q` (larger
/// cubes carry the same mass `μ(Q)` at a smaller factor `ℓ^{β−n}` when
/// `β < n`), so one pass over the subtree of `Q` suffices.
pub fn localized_maximal_integral(mu: &TreeAggregate, beta: f64, s: f64, q: CubeAddr) -> f64 {
    let root = mu.root();
    let n = root.dim();
    let e = beta - n as f64;
    let k0 = q.level();
    let mut cur = vec![side_pow(k0, e) * mu.mass(q)];
    for j in k0 + 1..=root.depth() {
        let shift = n as u32 * (j - k0);
        let base = (q.code() << shift) as usize;
        let level = mu.level(j);
        let scale = side_pow(j, e);
        let mut next = Vec::with_capacity(cur.len() << n);
        for i in 0..(1usize << shift) {
            next.push(cur[i >> n].max(scale * level[base + i]));
        }
        cur = next;
    }
    let h = root.leaf_volume();
    cur.iter().map(|v| v.powf(s)).sum::<f64>() * h
}

/// Exact integral of `(Σ|x−y_i|)^{α−m}` over `y ∈ cell^m` for the centre `x`
/// of a 1-D cell of side `h`.
pub fn self_cell_integral(m: usize, alpha: f64, h: f64) -> f64 {
    // 2^m ∫_{[0,a]^m} (Σu)^{α−m} du with a = h/2; the m-fold integral is the
    // m-th forward difference of x^α divided by α(α−1)…(α−m+1).
    let a = h / 2.0;
    let binom = |j: usize| -> f64 {
        (0..j).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
    };
    let sign = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
    let nearest = alpha.round();
    let degenerate = (alpha - nearest).abs() < 1e-7 && nearest >= 1.0 && (nearest as usize) < m;
    let body = if degenerate {
        // Numerator and denominator both vanish; take the ratio of derivatives.
        let k0 = nearest as usize;
        let num: f64 = (0..m)
            .map(|j| {
                let c = (m - j) as f64;
                sign(j) * binom(j) * c.powf(nearest) * c.ln()
            })
            .sum();
        let den: f64 = (0..m).filter(|&k| k != k0).map(|k| nearest - k as f64).product();
        num / den
    } else {
        let num: f64 = (0..m).map(|j| sign(j) * binom(j) * ((m - j) as f64).powf(alpha)).sum();
        let den: f64 = (0..m).map(|k| alpha - k as f64).product();
        num / den
    };
    2f64.powi(m as i32) * a.powf(alpha) * body
}

/// Leaf-centre quadrature of the m-linear fractional integral
/// `∫ ∏f_i(y_i) (Σ|x−y_i|)^{α−mn} dy`.
///
/// In one dimension the tuple with every `y_i` in the cell of `x` is replaced
/// by [`self_cell_integral`]; in higher dimension that tuple is dropped.
pub fn kernel_integral(fields: &[LeafField], alpha: f64, work_cap: u128) -> Result<LeafField> {
    let first = fields.first().ok_or(DtlError::ShapeMismatch { expected: 1, got: 0 })?;
    let root = first.root();
    if fields.iter().any(|f| f.root() != root) {
        return Err(DtlError::RootMismatch);
    }
    let m = fields.len();
    let n = root.dim();
    let mn = (m * n) as f64;
    if !(alpha > 0.0 && alpha < mn) {
        return Err(DtlError::BadExponent(format!("alpha {alpha} outside (0, {mn})")));
    }
    let big_n = root.leaf_count();
    let work = (big_n as u128).saturating_pow(m as u32 + 1);
    if work > work_cap {
        return Err(DtlError::ComplexityRefusal { work, cap: work_cap });
    }
    let centers: Vec<Vec<f64>> = (0..big_n).map(|i| root.leaf(i).center()).collect();
    let weight = root.leaf_volume().powi(m as i32);
    let exponent = alpha - mn;
    let diagonal = (n == 1).then(|| self_cell_integral(m, alpha, root.leaf_side()));
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    };

    let mut out = vec![0.0; big_n];
    let mut tuple = vec![0usize; m];
    for (x, slot) in out.iter_mut().enumerate() {
        let mut total = 0.0;
        tuple.iter_mut().for_each(|t| *t = 0);
        'tuples: loop {
            if tuple.iter().all(|&t| t == x) {
                if let Some(d) = diagonal {
                    let prod: f64 = fields.iter().map(|f| f.value(x)).product();
                    total += prod * d;
                }
            } else {
                let prod: f64 = fields.iter().zip(&tuple).map(|(f, &t)| f.value(t)).product();
                if prod != 0.0 {
                    let s: f64 = tuple.iter().map(|&t| dist(&centers[x], &centers[t])).sum();
                    total += prod * s.powf(exponent) * weight;
                }
            }
            let mut i = m;
            loop {
                if i == 0 {
                    break 'tuples;
                }
                i -= 1;
                tuple[i] += 1;
                if tuple[i] < big_n {
                    break;
                }
                tuple[i] = 0;
            }
        }
        *slot = total;
    }
    Ok(LeafField::from_trusted(root, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(root: RootSpec) -> TreeAggregate {
        TreeAggregate::of_field(&LeafField::constant(root, 1.0).unwrap())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn fractional_maximal_examples() {
        let root = RootSpec::new(1, 3).unwrap();
        let lebesgue = TreeAggregate::of_measure(&LeafMeasure::lebesgue(root));
        let m = fractional_maximal(&lebesgue, 0.5, None).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));

        let spike = TreeAggregate::of_field(&LeafField::indicator(root, root.leaf(0)).unwrap());
        let m = fractional_maximal(&spike, 0.0, None).unwrap();
        assert_eq!(m.value(0), 1.0);
        assert!(m.values()[4..].iter().all(|&v| v == 0.125));

        let atom = TreeAggregate::of_measure(&LeafMeasure::atomic(root, vec![(0, 1.0)]).unwrap());
        let m = fractional_maximal(&atom, 0.5, Some(root.root())).unwrap();
        let bands = [8f64.sqrt(), 2.0, 2f64.sqrt(), 2f64.sqrt(), 1.0, 1.0, 1.0, 1.0];
        for (v, b) in m.values().iter().zip(bands) {
            assert!(close(*v, b, 1e-15), "{v} vs {b}");
        }
        assert!(fractional_maximal(&atom, 1.0, None).is_err());
    }

    #[test]
    fn multilinear_maximal_examples() {
        let root = RootSpec::new(1, 3).unwrap();
        let m = multilinear_maximal(&[one(root), one(root)], 1.0).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
        assert!(matches!(
            multilinear_maximal(&[one(root), one(RootSpec::new(1, 2).unwrap())], 1.0),
            Err(DtlError::RootMismatch)
        ));
    }

    #[test]
    fn dyadic_integral_examples() {
        let root = RootSpec::new(1, 2).unwrap();
        let i = dyadic_integral_operator(&[one(root), one(root)], &KernelWeight::canonical(1.0, 2)).unwrap();
        assert!(i.values().iter().all(|&v| v == 1.75));

        let root3 = RootSpec::new(1, 3).unwrap();
        let i = dyadic_integral_operator(&[one(root3)], &KernelWeight::canonical(0.5, 1)).unwrap();
        let expected: f64 = (0..=3).map(|k| 2f64.powf(-0.5 * k as f64)).sum();
        assert!(i.values().iter().all(|&v| close(v, expected, 1e-15)));

        let zero = KernelWeight::explicit(vec![0.0; 4]).unwrap();
        let i = dyadic_integral_operator(&[one(root3)], &zero).unwrap();
        assert!(i.values().iter().all(|&v| v == 0.0));
        let short = KernelWeight::explicit(vec![1.0; 2]).unwrap();
        assert!(dyadic_integral_operator(&[one(root3)], &short).is_err());
    }

    #[test]
    fn sparse_integral_examples() {
        let root = RootSpec::new(1, 3).unwrap();
        let k1 = KernelWeight::explicit(vec![1.0; 4]).unwrap();
        let s = sparse_integral_operator(&[one(root)], &k1, &[root.root()]).unwrap();
        assert!(s.values().iter().all(|&v| v == 1.0));
        let s = sparse_integral_operator(&[one(root)], &k1, &[]).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mu_maximal_examples() {
        let root = RootSpec::new(1, 3).unwrap();
        let atom = LeafMeasure::atomic(root, vec![(0, 1.0)]).unwrap();
        let g = LeafField::indicator(root, root.leaf(0)).unwrap();
        let m = mu_maximal(&g, &atom).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
        let ones = LeafField::constant(root, 1.0).unwrap();
        let dens = LeafMeasure::Density(LeafField::new(root, vec![0.0, 1.0, 2.0, 0.0, 0.0, 3.0, 1.0, 0.5]).unwrap());
        assert!(mu_maximal(&ones, &dens).unwrap().values().iter().all(|&v| close(v, 1.0, 1e-15)));
        let empty = LeafMeasure::atomic(root, vec![]).unwrap();
        assert_eq!(mu_maximal(&ones, &empty), Err(DtlError::ZeroMeasure));
    }

    #[test]
    fn self_cell_integral_one_dimensional() {
        let h = 0.25;
        let exact = 2.0 * (h / 2.0f64).powf(0.5) / 0.5;
        assert!(close(self_cell_integral(1, 0.5, h), exact, 1e-14));
    }

    fn midpoint_square(alpha: f64, a: f64, steps: usize) -> f64 {
        // 4 ∫∫_{[0,a]^2} (u+v)^{α−2}, midpoint rule.
        let d = a / steps as f64;
        let mut s = 0.0;
        for i in 0..steps {
            for j in 0..steps {
                let u = (i as f64 + 0.5) * d;
                let v = (j as f64 + 0.5) * d;
                s += (u + v).powf(alpha - 2.0);
            }
        }
        4.0 * s * d * d
    }

    #[test]
    fn self_cell_integral_bilinear_matches_quadrature() {
        for alpha in [0.5, 1.0, 1.5, 1.9] {
            let exact = self_cell_integral(2, alpha, 0.5);
            let approx = midpoint_square(alpha, 0.25, 1500);
            assert!((exact - approx).abs() < 2e-2 * exact, "alpha {alpha}: {exact} vs {approx}");
        }
        // Continuity across the removable singularity at alpha = 1.
        let left = self_cell_integral(2, 1.0 - 1e-5, 0.5);
        let mid = self_cell_integral(2, 1.0, 0.5);
        assert!(close(left, mid, 1e-4));
    }

    #[test]
    fn kernel_integral_matches_direct_sum() {
        let root = RootSpec::new(1, 2).unwrap();
        let f = LeafField::constant(root, 1.0).unwrap();
        let out = kernel_integral(std::slice::from_ref(&f), 0.5, DEFAULT_KERNEL_CAP).unwrap();
        let h = 0.25f64;
        let x = 0.125f64;
        let mut direct = 2.0 * (h / 2.0).powf(0.5) / 0.5;
        for y in [0.375, 0.625, 0.875] {
            direct += (y - x).abs().powf(-0.5) * h;
        }
        assert!(close(out.value(0), direct, 1e-12));
        let doubled = kernel_integral(&[f.scaled(2.0).unwrap()], 0.5, DEFAULT_KERNEL_CAP).unwrap();
        for (a, b) in out.values().iter().zip(doubled.values()) {
            assert_eq!(2.0 * a, *b);
        }
        let zero = LeafField::constant(root, 0.0).unwrap();
        assert!(kernel_integral(&[zero], 0.5, DEFAULT_KERNEL_CAP).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(matches!(
            kernel_integral(&[f.clone(), f], 0.5, 10),
            Err(DtlError::ComplexityRefusal { .. })
        ));
    }

    #[test]
    fn localized_integral_matches_maximal_field() {
        let root = RootSpec::new(1, 3).unwrap();
        let atom = TreeAggregate::of_measure(&LeafMeasure::atomic(root, vec![(0, 1.0)]).unwrap());
        let v = localized_maximal_integral(&atom, 0.5, 2.0, root.root());
        assert!(close(v, 2.5, 1e-15));
    }
}
