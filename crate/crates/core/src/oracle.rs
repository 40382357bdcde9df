//! Naive reference implementations for tests.
//!
//! Every function here loops over index vectors and leaves directly and
//! shares no code with the aggregate-based paths beyond [`RootSpec`] and the
//! row-major leaf order.

#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;

use crate::grid::{LeafField, LeafMeasure, RootSpec};

/// A cube as `(level, index vector)`.
pub type Cube = (u32, Vec<u64>);

pub fn all_cubes(root: &RootSpec) -> Vec<Cube> {
    let n = root.dim();
    let mut out = Vec::new();
    for k in 0..=root.depth() {
        let side = 1u64 << k;
        let count = side.pow(n as u32);
        for r in 0..count {
            // row-major: first coordinate slowest
            let mut idx = vec![0u64; n];
            let mut t = r;
            for d in (0..n).rev() {
                idx[d] = t % side;
                t /= side;
            }
            out.push((k, idx));
        }
    }
    out
}

pub fn leaf_index(root: &RootSpec, leaf: usize) -> Vec<u64> {
    let side = 1u64 << root.depth();
    let mut idx = vec![0u64; root.dim()];
    let mut t = leaf as u64;
    for d in (0..root.dim()).rev() {
        idx[d] = t % side;
        t /= side;
    }
    idx
}

pub fn leaf_in(root: &RootSpec, leaf: usize, q: &Cube) -> bool {
    let shift = root.depth() - q.0;
    leaf_index(root, leaf).iter().zip(&q.1).all(|(l, c)| l >> shift == *c)
}

pub fn volume(root: &RootSpec, q: &Cube) -> f64 {
    0.5f64.powi((q.0 as usize * root.dim()) as i32)
}

pub fn side(q: &Cube) -> f64 {
    0.5f64.powi(q.0 as i32)
}

fn leaf_vol(root: &RootSpec) -> f64 {
    0.5f64.powi((root.depth() as usize * root.dim()) as i32)
}

/// `∫_Q f dx`.
pub fn integral(root: &RootSpec, values: &[f64], q: &Cube) -> f64 {
    let mut s = 0.0;
    for leaf in 0..values.len() {
        if leaf_in(root, leaf, q) {
            s += values[leaf];
        }
    }
    s * leaf_vol(root)
}

/// Per-leaf masses of a measure, row-major.
pub fn masses(mu: &LeafMeasure) -> Vec<f64> {
    let root = mu.root();
    match mu {
        LeafMeasure::Density(d) => d.values().iter().map(|v| v * leaf_vol(&root)).collect(),
        LeafMeasure::Atomic { atoms, .. } => {
            let mut m = vec![0.0; root.leaf_count()];
            for &(i, w) in atoms {
                m[i] += w;
            }
            m
        }
    }
}

pub fn mass(root: &RootSpec, masses: &[f64], q: &Cube) -> f64 {
    (0..masses.len()).filter(|&l| leaf_in(root, l, q)).map(|l| masses[l]).sum()
}

/// `∫_{3Q∩root} f dx` by testing every leaf against the enlarged box.
pub fn enlarged_integral(root: &RootSpec, values: &[f64], q: &Cube) -> f64 {
    let h = side(q);
    let lo: Vec<f64> = q.1.iter().map(|&c| (c as f64 - 1.0) * h).collect();
    let hi: Vec<f64> = q.1.iter().map(|&c| (c as f64 + 2.0) * h).collect();
    let lh = 0.5f64.powi(root.depth() as i32);
    let mut s = 0.0;
    for leaf in 0..values.len() {
        let idx = leaf_index(root, leaf);
        let inside = idx.iter().enumerate().all(|(d, &i)| {
            let x = i as f64 * lh;
            x >= lo[d] && x + lh <= hi[d]
        });
        if inside {
            s += values[leaf];
        }
    }
    s * leaf_vol(root)
}

/// The cubes containing a leaf, root first.
pub fn cubes_containing(root: &RootSpec, leaf: usize) -> Vec<Cube> {
    let idx = leaf_index(root, leaf);
    (0..=root.depth())
        .map(|k| (k, idx.iter().map(|i| i >> (root.depth() - k)).collect()))
        .collect()
}

/// `ν(Q)` for every cube, each by its own loop over all leaves.
pub fn mass_table(root: &RootSpec, masses: &[f64]) -> HashMap<Cube, f64> {
    all_cubes(root).into_iter().map(|q| {
        let m = mass(root, masses, &q);
        (q, m)
    }).collect()
}

fn pw(values: &[f64], p: f64) -> Vec<f64> {
    values.iter().map(|v| v.powf(p)).collect()
}

pub fn morrey(f: &LeafField, p: f64, p0: f64) -> f64 {
    let root = f.root();
    let fp = pw(f.values(), p);
    all_cubes(&root)
        .iter()
        .map(|q| {
            let v = volume(&root, q);
            v.powf(1.0 / p0) * (integral(&root, &fp, q) / v).powf(1.0 / p)
        })
        .fold(0.0, f64::max)
}

pub fn product_morrey(fields: &[LeafField], p_vec: &[f64], p0: f64) -> f64 {
    let root = fields[0].root();
    let p = 1.0 / p_vec.iter().map(|p| 1.0 / p).sum::<f64>();
    all_cubes(&root)
        .iter()
        .map(|q| {
            let mut v = volume(&root, q).powf(1.0 / p0 - 1.0 / p);
            for (f, &pi) in fields.iter().zip(p_vec) {
                v *= integral(&root, &pw(f.values(), pi), q).powf(1.0 / pi);
            }
            v
        })
        .fold(0.0, f64::max)
}

pub fn radon_morrey(g: &LeafField, q: f64, q0: f64, mu: &LeafMeasure) -> f64 {
    let root = g.root();
    let w: Vec<f64> = masses(mu).iter().zip(g.values()).map(|(m, v)| if *m == 0.0 { 0.0 } else { m * v.powf(q) }).collect();
    all_cubes(&root)
        .iter()
        .map(|c| volume(&root, c).powf(1.0 / q0 - 1.0 / q) * mass(&root, &w, c).powf(1.0 / q))
        .fold(0.0, f64::max)
}

pub fn lebesgue(f: &LeafField, p: f64, mu: Option<&LeafMeasure>) -> f64 {
    let root = f.root();
    let m = mu.map(masses).unwrap_or_else(|| vec![leaf_vol(&root); root.leaf_count()]);
    f.values().iter().zip(&m).map(|(v, w)| if *w == 0.0 { 0.0 } else { v.powf(p) * w }).sum::<f64>().powf(1.0 / p)
}

/// `M_β[ν1_Q]` at every leaf of `Q` (zero outside); `table` holds `ν(R)`.
pub fn localized_maximal(root: &RootSpec, table: &HashMap<Cube, f64>, beta: f64, q: &Cube) -> Vec<f64> {
    let n = root.dim() as f64;
    (0..root.leaf_count())
        .map(|leaf| {
            if !leaf_in(root, leaf, q) {
                return 0.0;
            }
            cubes_containing(root, leaf)
                .iter()
                .map(|r| {
                    // R ∩ Q is R below Q and Q above it
                    let m = if r.0 >= q.0 { table[r] } else { table[q] };
                    side(r).powf(beta - n) * m
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `M_β ν` at every leaf over all containing cubes.
pub fn fractional_maximal(root: &RootSpec, masses: &[f64], beta: f64) -> Vec<f64> {
    localized_maximal(root, &mass_table(root, masses), beta, &(0, vec![0; root.dim()]))
}

/// `sup_Q (∫_Q (M_β[ν1_Q])^{p'} dx / ν(Q))^{1/p'}`, zero-mass cubes skipped.
pub fn testing_constant(root: &RootSpec, masses: &[f64], beta: f64, p: f64) -> f64 {
    let pp = p / (p - 1.0);
    let table = mass_table(root, masses);
    all_cubes(root)
        .iter()
        .map(|q| {
            let m = table[q];
            if m == 0.0 {
                return 0.0;
            }
            let mq = localized_maximal(root, &table, beta, q);
            let int: f64 = mq.iter().map(|v| v.powf(pp)).sum::<f64>() * leaf_vol(root);
            (int / m).powf(1.0 / pp)
        })
        .fold(0.0, f64::max)
}

pub fn modified_morrey(f: &LeafField, p: f64, alpha: f64) -> f64 {
    let root = f.root();
    let w: Vec<f64> = f.values().iter().map(|v| v.powf(p) * leaf_vol(&root)).collect();
    testing_constant(&root, &w, alpha, p)
}

pub fn adams(root: &RootSpec, masses: &[f64], beta: f64) -> f64 {
    all_cubes(root).iter().map(|q| mass(root, masses, q) / side(q).powf(beta)).fold(0.0, f64::max)
}

/// `sup_Q s(Q)(ν(Q)/|Q|)^e` with `s` a function of the level.
pub fn density_scan(root: &RootSpec, masses: &[f64], scale: impl Fn(u32) -> f64, e: f64) -> f64 {
    all_cubes(root)
        .iter()
        .map(|q| scale(q.0) * (mass(root, masses, q) / volume(root, q)).powf(e))
        .fold(0.0, f64::max)
}

pub fn ap(w: &LeafField, p: f64) -> f64 {
    let root = w.root();
    all_cubes(&root)
        .iter()
        .map(|q| {
            let v = volume(&root, q);
            let a = integral(&root, w.values(), q) / v;
            let mut dual = 0.0;
            for leaf in 0..root.leaf_count() {
                if leaf_in(&root, leaf, q) {
                    let x = w.values()[leaf];
                    if x == 0.0 {
                        return f64::INFINITY;
                    }
                    dual += x.powf(-1.0 / (p - 1.0));
                }
            }
            a * (dual * leaf_vol(&root) / v).powf(p - 1.0)
        })
        .fold(0.0, f64::max)
}

/// `Σ_{Q∋x} K(level)·∏∫_Q f_i` at every leaf.
pub fn dyadic_sum(fields: &[LeafField], kernel: impl Fn(u32) -> f64) -> Vec<f64> {
    let root = fields[0].root();
    (0..root.leaf_count())
        .map(|leaf| {
            cubes_containing(&root, leaf)
                .iter()
                .map(|q| kernel(q.0) * fields.iter().map(|f| integral(&root, f.values(), q)).product::<f64>())
                .sum()
        })
        .collect()
}

/// `sup_{Q∋x} ℓ^{α−mn} ∏∫_Q f_i` at every leaf.
pub fn multilinear_maximal(fields: &[LeafField], alpha: f64) -> Vec<f64> {
    let root = fields[0].root();
    let mn = (fields.len() * root.dim()) as f64;
    (0..root.leaf_count())
        .map(|leaf| {
            cubes_containing(&root, leaf)
                .iter()
                .map(|q| side(q).powf(alpha - mn) * fields.iter().map(|f| integral(&root, f.values(), q)).product::<f64>())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `Σ_{Q∋x} ℓ^α ∏ (1/|Q|)∫_{3Q} f_i` at every leaf.
pub fn discretization_majorant(fields: &[LeafField], alpha: f64) -> Vec<f64> {
    let root = fields[0].root();
    (0..root.leaf_count())
        .map(|leaf| {
            cubes_containing(&root, leaf)
                .iter()
                .map(|q| {
                    let v = volume(&root, q);
                    side(q).powf(alpha)
                        * fields.iter().map(|f| enlarged_integral(&root, f.values(), q) / v).product::<f64>()
                })
                .sum()
        })
        .collect()
}

/// `sup_{Q∋x, μ(Q)>0} μ(Q)^{-1}∫_Q g dμ` at every leaf.
pub fn mu_maximal(g: &LeafField, mu: &LeafMeasure) -> Vec<f64> {
    let root = g.root();
    let m = masses(mu);
    let gm: Vec<f64> = m.iter().zip(g.values()).map(|(a, b)| a * b).collect();
    (0..root.leaf_count())
        .map(|leaf| {
            cubes_containing(&root, leaf)
                .iter()
                .filter_map(|q| {
                    let w = mass(&root, &m, q);
                    (w > 0.0).then(|| mass(&root, &gm, q) / w)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Naive canonical-E sparsity check: leaf counts of `S` minus members
/// strictly inside it.
pub fn is_sparse(root: &RootSpec, family: &[Cube]) -> bool {
    family.iter().all(|s| {
        let total = (0..root.leaf_count()).filter(|&l| leaf_in(root, l, s)).count();
        let free = (0..root.leaf_count())
            .filter(|&l| {
                leaf_in(root, l, s)
                    && !family.iter().any(|t| t.0 > s.0 && contains(s, t) && leaf_in(root, l, t))
            })
            .count();
        2 * free >= total
    })
}

pub fn contains(a: &Cube, b: &Cube) -> bool {
    b.0 >= a.0 && a.1.iter().zip(&b.1).all(|(x, y)| y >> (b.0 - a.0) == *x)
}

/// Exact sup of `Σ_{S∈𝒮} w(S)` over all sparse subfamilies of `𝒟|_Q`
/// by enumerating every subset.
pub fn best_sparse_sum(root: &RootSpec, q: &Cube, weight: impl Fn(&Cube) -> f64) -> f64 {
    let cands: Vec<Cube> = all_cubes(root).into_iter().filter(|c| contains(q, c)).collect();
    assert!(cands.len() <= 20, "subset enumeration is exponential");
    let w: Vec<f64> = cands.iter().map(&weight).collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << cands.len()) {
        let fam: Vec<Cube> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| cands[i].clone()).collect();
        if is_sparse(root, &fam) {
            let s: f64 = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| w[i]).sum();
            best = best.max(s);
        }
    }
    best
}
