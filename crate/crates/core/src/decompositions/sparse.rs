use std::collections::{HashMap, VecDeque};

use crate::error::Result;
use crate::grid::{CubeAddr, RootSpec, TreeAggregate};
use crate::operators::{dyadic_integral_operator, shared_root, sparse_integral_operator, KernelWeight};
use crate::scan::ratio;

/// Output of [`build_sparse_family`], members in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    root: RootSpec,
    top: CubeAddr,
    cubes: Vec<CubeAddr>,
    parent: Vec<Option<usize>>,
    generation: Vec<u32>,
}

impl SparseFamily {
    pub fn root(&self) -> RootSpec {
        self.root
    }

    pub fn top(&self) -> CubeAddr {
        self.top
    }

    pub fn cubes(&self) -> &[CubeAddr] {
        &self.cubes
    }

    /// Stopping parent of the `i`-th member.
    pub fn parent(&self, i: usize) -> Option<CubeAddr> {
        self.parent[i].map(|j| self.cubes[j])
    }

    pub fn generation(&self, i: usize) -> u32 {
        self.generation[i]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn certificate(&self) -> SparseCheck {
        verify_sparse(&self.root, &self.cubes).expect("members belong to the tree")
    }
}

fn xbar(fields: &[TreeAggregate], q: CubeAddr) -> f64 {
    let v = q.volume();
    fields.iter().map(|a| a.mass(q) / v).product()
}

/// Stopping family below `q0`: the children of a member `S` are the maximal
/// `S' ⊊ S` with `∏⨍_{S'} f_i > 2^m ∏⨍_S f_i`.
pub fn build_sparse_family(fields: &[TreeAggregate], q0: CubeAddr) -> Result<SparseFamily> {
    let root = shared_root(fields)?;
    root.check(q0)?;
    let factor = 2f64.powi(fields.len() as i32);
    let mut cubes = vec![q0];
    let mut parent = vec![None];
    let mut generation = vec![0u32];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let s = cubes[i];
        let threshold = factor * xbar(fields, s);
        let mut stack: Vec<CubeAddr> = root.children(s).into_iter().rev().collect();
        while let Some(c) = stack.pop() {
            if xbar(fields, c) > threshold {
                cubes.push(c);
                parent.push(Some(i));
                generation.push(generation[i] + 1);
                queue.push_back(cubes.len() - 1);
            } else {
                stack.extend(root.children(c).into_iter().rev());
            }
        }
    }
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by_key(|&i| cubes[i]);
    let mut rank = vec![0usize; cubes.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    Ok(SparseFamily {
        root,
        top: q0,
        cubes: order.iter().map(|&i| cubes[i]).collect(),
        parent: order.iter().map(|&i| parent[i].map(|p| rank[p])).collect(),
        generation: order.iter().map(|&i| generation[i]).collect(),
    })
}

/// Canonical exceptional set of one member.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalSet {
    pub cube: CubeAddr,
    /// Nearest member strictly containing `cube`.
    pub parent: Option<CubeAddr>,
    /// Row-major leaf indices of `E(S)`.
    pub leaves: Vec<usize>,
    /// `|E(S)|` and `|S|` in units of the leaf volume.
    pub units: u64,
    pub cube_units: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCheck {
    pub is_sparse: bool,
    /// `max_S Σ_{S'⊆S} |S'| / |S|`.
    pub carleson: f64,
    pub sets: Vec<ExceptionalSet>,
}

/// Canonical-E sparsity certificate and Carleson constant of a cube family.
pub fn verify_sparse(root: &RootSpec, cubes: &[CubeAddr]) -> Result<SparseCheck> {
    let mut family: Vec<CubeAddr> = cubes.to_vec();
    for &q in &family {
        root.check(q)?;
    }
    family.sort();
    family.dedup();
    let index: HashMap<CubeAddr, usize> = family.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let parent: Vec<Option<usize>> = family
        .iter()
        .map(|q| q.ancestors().into_iter().find_map(|a| index.get(&a).copied()))
        .collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); family.len()];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    let mut packed: Vec<u64> = family.iter().map(|&q| root.leaf_units(q)).collect();
    for i in 0..family.len() {
        let own = root.leaf_units(family[i]);
        let mut up = parent[i];
        while let Some(p) = up {
            packed[p] += own;
            up = parent[p];
        }
    }
    let mut sets = Vec::with_capacity(family.len());
    let mut is_sparse = true;
    let mut carleson = 0.0f64;
    for (i, &s) in family.iter().enumerate() {
        let cube_units = root.leaf_units(s);
        let mut holes: Vec<std::ops::Range<u64>> =
            children[i].iter().map(|&c| root.leaf_code_range(family[c])).collect();
        holes.sort_by_key(|r| r.start);
        let mut leaves = Vec::new();
        let mut next_hole = holes.iter().peekable();
        let mut code = root.leaf_code_range(s).start;
        let end = root.leaf_code_range(s).end;
        while code < end {
            if let Some(h) = next_hole.peek() {
                if h.start == code {
                    code = h.end;
                    next_hole.next();
                    continue;
                }
            }
            leaves.push(CubeAddr::from_code(root.dim(), root.depth(), code).row_major() as usize);
            code += 1;
        }
        leaves.sort_unstable();
        let units = leaves.len() as u64;
        is_sparse &= 2 * units >= cube_units;
        carleson = carleson.max(packed[i] as f64 / cube_units as f64);
        sets.push(ExceptionalSet {
            cube: s,
            parent: parent[i].map(|p| family[p]),
            leaves,
            units,
            cube_units,
        });
    }
    Ok(SparseCheck { is_sparse, carleson, sets })
}

/// Incremental canonical-E certificate.
///
/// Keeps, for every member, the measure (in leaf units) covered by the
/// maximal members strictly inside it. Inserting a cube changes only its own
/// entry and that of its nearest member ancestor, so feasibility is checked
/// locally. Removals must undo insertions in reverse order.
#[derive(Debug, Clone)]
pub struct SparseCertifier {
    root: RootSpec,
    covered: HashMap<CubeAddr, u64>,
}

impl SparseCertifier {
    pub fn new(root: RootSpec) -> Self {
        Self { root, covered: HashMap::new() }
    }

    pub fn contains(&self, q: &CubeAddr) -> bool {
        self.covered.contains_key(q)
    }

    pub fn members(&self) -> Vec<CubeAddr> {
        let mut v: Vec<CubeAddr> = self.covered.keys().copied().collect();
        v.sort();
        v
    }

    fn nearest_member_ancestor(&self, q: CubeAddr) -> Option<CubeAddr> {
        q.ancestors().into_iter().find(|a| self.covered.contains_key(a))
    }

    fn covered_inside(&self, q: CubeAddr) -> u64 {
        let mut total = 0;
        let mut stack = self.root.children(q);
        while let Some(c) = stack.pop() {
            if self.covered.contains_key(&c) {
                total += self.root.leaf_units(c);
            } else {
                stack.extend(self.root.children(c));
            }
        }
        total
    }

    /// Inserts `q` if the family stays certified; returns whether it did.
    pub fn insert(&mut self, q: CubeAddr) -> bool {
        if self.covered.contains_key(&q) {
            return true;
        }
        let units = self.root.leaf_units(q);
        let inside = self.covered_inside(q);
        if 2 * (units - inside) < units {
            return false;
        }
        let up = self.nearest_member_ancestor(q);
        if let Some(p) = up {
            let pu = self.root.leaf_units(p);
            let after = self.covered[&p] + units - inside;
            if 2 * (pu - after) < pu {
                return false;
            }
            *self.covered.get_mut(&p).unwrap() = after;
        }
        self.covered.insert(q, inside);
        true
    }

    pub fn remove(&mut self, q: CubeAddr) {
        if let Some(inside) = self.covered.remove(&q) {
            if let Some(p) = self.nearest_member_ancestor(q) {
                *self.covered.get_mut(&p).unwrap() -= self.root.leaf_units(q) - inside;
            }
        }
    }
}

/// Sparse domination of the canonical dyadic operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Domination {
    pub family: SparseFamily,
    /// `max_x 𝕴^𝒟(x) / 𝕴^𝒮(x)` with `0/0 = 0`.
    pub constant: f64,
    /// Row-major leaf attaining `constant`.
    pub witness_leaf: usize,
}

pub fn sparse_dominate(fields: &[TreeAggregate], alpha: f64) -> Result<Domination> {
    let root = shared_root(fields)?;
    let family = build_sparse_family(fields, root.root())?;
    let kernel = KernelWeight::canonical(alpha, fields.len());
    let full = dyadic_integral_operator(fields, &kernel)?;
    let sparse = sparse_integral_operator(fields, &kernel, family.cubes())?;
    let mut constant = 0.0;
    let mut witness_leaf = 0;
    for (i, (a, b)) in full.values().iter().zip(sparse.values()).enumerate() {
        let r = ratio(*a, *b);
        if r > constant {
            constant = r;
            witness_leaf = i;
        }
    }
    Ok(Domination { family, constant, witness_leaf })
}
