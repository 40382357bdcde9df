use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{DtlError, Result};
use crate::grid::{CubeAddr, LeafField, LeafMeasure, RootSpec, TreeAggregate};

/// Measure against which a forest takes averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMeasure {
    Lebesgue,
    Measure,
}

/// The stopping rule: strictly more than twice the parent average.
pub fn exceeds_twice(avg: f64, parent_avg: f64) -> bool {
    avg > 2.0 * parent_avg
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestNode {
    pub cube: CubeAddr,
    pub generation: u32,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Principal cubes of a pair `(h, ν)` below `Q₀`.
#[derive(Debug, Clone)]
pub struct CoronaForest {
    root: RootSpec,
    pair: PairMeasure,
    nodes: Vec<ForestNode>,
    index: HashMap<CubeAddr, usize>,
    nu: TreeAggregate,
    h_nu: TreeAggregate,
}

impl CoronaForest {
    pub fn root(&self) -> RootSpec {
        self.root
    }

    pub fn pair(&self) -> PairMeasure {
        self.pair
    }

    /// `Q₀`.
    pub fn top(&self) -> CubeAddr {
        self.nodes[0].cube
    }

    /// Nodes in canonical cube order; the first node is `Q₀`.
    pub fn nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    pub fn cubes(&self) -> Vec<CubeAddr> {
        self.nodes.iter().map(|n| n.cube).collect()
    }

    pub fn contains(&self, q: &CubeAddr) -> bool {
        self.index.contains_key(q)
    }

    pub fn node(&self, q: &CubeAddr) -> Result<&ForestNode> {
        self.index.get(q).map(|&i| &self.nodes[i]).ok_or(DtlError::NotAPrincipalCube)
    }

    /// `ch(F)` in canonical order.
    pub fn children_of(&self, f: &CubeAddr) -> Result<Vec<CubeAddr>> {
        Ok(self.node(f)?.children.iter().map(|&c| self.nodes[c].cube).collect())
    }

    /// `ν(Q)`.
    pub fn nu_mass(&self, q: CubeAddr) -> f64 {
        self.nu.mass(q)
    }

    /// `ν`-average of `h` over `Q`; `None` when `ν(Q) = 0`.
    pub fn average(&self, q: CubeAddr) -> Option<f64> {
        let m = self.nu.mass(q);
        (m > 0.0).then(|| self.h_nu.mass(q) / m)
    }

    /// Row-major leaves of `E(F) = F \ ∪ ch(F)`.
    pub fn exceptional_leaves(&self, f: &CubeAddr) -> Result<Vec<usize>> {
        let kids = self.children_of(f)?;
        let mut out: Vec<usize> = self
            .root
            .leaf_code_range(*f)
            .filter(|&code| {
                let leaf = CubeAddr::from_code(self.root.dim(), self.root.depth(), code);
                !kids.iter().any(|k| k.contains(&leaf))
            })
            .map(|code| CubeAddr::from_code(self.root.dim(), self.root.depth(), code).row_major() as usize)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// `|E(F)|` in leaf units.
    pub fn exceptional_units(&self, f: &CubeAddr) -> Result<u64> {
        let kids = self.children_of(f)?;
        Ok(self.root.leaf_units(*f) - kids.iter().map(|k| self.root.leaf_units(*k)).sum::<u64>())
    }

    /// `ν(E(F))`.
    pub fn exceptional_nu(&self, f: &CubeAddr) -> Result<f64> {
        let kids = self.children_of(f)?;
        Ok(self.nu.mass(*f) - kids.iter().map(|k| self.nu.mass(*k)).sum::<f64>())
    }
}

/// Principal cubes of `(h, ν)` below `Q₀`; `ν = dx` when `nu` is `None`.
///
/// Cubes of zero `ν`-mass never stop.
pub fn build_principal_cubes(
    h: &LeafField,
    nu: Option<&LeafMeasure>,
    q0: CubeAddr,
) -> Result<CoronaForest> {
    let root = h.root();
    root.check(q0)?;
    let (pair, measure) = match nu {
        None => (PairMeasure::Lebesgue, LeafMeasure::lebesgue(root)),
        Some(mu) => (PairMeasure::Measure, mu.clone()),
    };
    if measure.root() != root {
        return Err(DtlError::RootMismatch);
    }
    let nu_agg = TreeAggregate::of_measure(&measure);
    let h_nu = TreeAggregate::of_weighted(h, 1.0, &measure)?;
    if nu_agg.mass(q0) <= 0.0 {
        return Err(DtlError::ZeroMeasure);
    }
    let avg = |q: CubeAddr| {
        let m = nu_agg.mass(q);
        (m > 0.0).then(|| h_nu.mass(q) / m)
    };

    let mut cubes = vec![q0];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut generation = vec![0u32];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let f = cubes[i];
        let parent_avg = avg(f).expect("forest cubes carry mass");
        let mut stack: Vec<CubeAddr> = root.children(f).into_iter().rev().collect();
        while let Some(c) = stack.pop() {
            match avg(c) {
                Some(a) if exceeds_twice(a, parent_avg) => {
                    cubes.push(c);
                    parent.push(Some(i));
                    generation.push(generation[i] + 1);
                    queue.push_back(cubes.len() - 1);
                }
                _ => stack.extend(root.children(c).into_iter().rev()),
            }
        }
    }

    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by_key(|&i| cubes[i]);
    let mut rank = vec![0usize; cubes.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let mut nodes: Vec<ForestNode> = order
        .iter()
        .map(|&i| ForestNode {
            cube: cubes[i],
            generation: generation[i],
            parent: parent[i].map(|p| rank[p]),
            children: Vec::new(),
        })
        .collect();
    for i in 0..nodes.len() {
        if let Some(p) = nodes[i].parent {
            nodes[p].children.push(i);
        }
    }
    let index = nodes.iter().enumerate().map(|(i, n)| (n.cube, i)).collect();
    Ok(CoronaForest { root, pair, nodes, index, nu: nu_agg, h_nu })
}

/// Smallest forest cube containing `q`, `q` itself included.
pub fn stopping_parent(forest: &CoronaForest, q: CubeAddr) -> Result<CubeAddr> {
    if !forest.root.holds(q) || !forest.top().contains(&q) {
        return Err(DtlError::OutsideRoot);
    }
    let mut c = q;
    loop {
        if forest.contains(&c) {
            return Ok(c);
        }
        c = c.parent().map_err(|_| DtlError::OutsideRoot)?;
    }
}

/// Children of a principal cube `G` of `𝒢`, sorted by how the `ℱ`-stopping
/// parent of each child sits relative to `G`.
///
/// A child `G'` is witnessed when some `Q` with `G' ⊊ Q ⊆ G` has
/// `π_𝒢(Q) = G`. With `F = π_ℱ(G')`, witnessed children go to `first` when
/// `π_𝒢(F) = G'`, else to `second` when `π_𝒢(F) = G`, else to `third` when
/// `F ⊋ G`; the tests are applied in that order so the lists are disjoint.
/// Anything left over lands in `remainder`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChildClassification {
    pub g: CubeAddr,
    pub first: Vec<CubeAddr>,
    pub second: Vec<CubeAddr>,
    pub third: Vec<CubeAddr>,
    pub remainder: Vec<CubeAddr>,
}

impl ChildClassification {
    pub fn classified(&self) -> impl Iterator<Item = &CubeAddr> {
        self.first.iter().chain(&self.second).chain(&self.third)
    }
}

pub fn classify_children(
    g_forest: &CoronaForest,
    f_forest: &CoronaForest,
    g: CubeAddr,
) -> Result<ChildClassification> {
    let kids = g_forest.children_of(&g)?;
    if g_forest.root != f_forest.root || !f_forest.top().contains(&g) {
        return Err(DtlError::OutsideRoot);
    }
    let mut out = ChildClassification {
        g,
        first: Vec::new(),
        second: Vec::new(),
        third: Vec::new(),
        remainder: Vec::new(),
    };
    for child in kids {
        let witnessed = child
            .ancestors()
            .into_iter()
            .take_while(|a| g.contains(a))
            .any(|a| stopping_parent(g_forest, a).map(|p| p == g).unwrap_or(false));
        if !witnessed {
            out.remainder.push(child);
            continue;
        }
        let f = stopping_parent(f_forest, child)?;
        let pg = stopping_parent(g_forest, f)?;
        if pg == child {
            out.first.push(child);
        } else if pg == g {
            out.second.push(child);
        } else if f.strictly_contains(&g) {
            out.third.push(child);
        } else {
            out.remainder.push(child);
        }
    }
    Ok(out)
}

/// `f·1_{E_𝒢(G)} + Σ_{classified G'} (⨍_{G'} f) 1_{G'}`, zero elsewhere.
pub fn corona_projection(
    f: &LeafField,
    g_forest: &CoronaForest,
    classification: &ChildClassification,
    g: CubeAddr,
) -> Result<LeafField> {
    if classification.g != g {
        return Err(DtlError::NotAPrincipalCube);
    }
    let root = g_forest.root();
    if f.root() != root {
        return Err(DtlError::RootMismatch);
    }
    let agg = TreeAggregate::of_field(f);
    let mut values = vec![0.0; root.leaf_count()];
    for leaf in g_forest.exceptional_leaves(&g)? {
        values[leaf] = f.value(leaf);
    }
    for &child in classification.classified() {
        let avg = agg.mass(child) / child.volume();
        for leaf in root.leaves_in(child) {
            values[leaf] = avg;
        }
    }
    Ok(LeafField::from_trusted(root, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(level: u32, i: u32) -> CubeAddr {
        CubeAddr::from_index(level, &[i]).unwrap()
    }

    #[test]
    fn principal_cube_examples() {
        let root = RootSpec::new(1, 3).unwrap();
        let one = LeafField::constant(root, 1.0).unwrap();
        assert_eq!(build_principal_cubes(&one, None, root.root()).unwrap().cubes(), vec![root.root()]);

        let spike = LeafField::indicator(root, root.leaf(0)).unwrap();
        let forest = build_principal_cubes(&spike, None, root.root()).unwrap();
        assert_eq!(forest.cubes(), vec![root.root(), c1(2, 0)]);
        assert_eq!(stopping_parent(&forest, c1(3, 0)).unwrap(), c1(2, 0));
        assert_eq!(stopping_parent(&forest, c1(1, 1)).unwrap(), root.root());
        assert_eq!(stopping_parent(&forest, c1(2, 0)).unwrap(), c1(2, 0));
        assert_eq!(forest.exceptional_units(&root.root()).unwrap(), 6);
        assert_eq!(forest.exceptional_leaves(&root.root()).unwrap(), vec![2, 3, 4, 5, 6, 7]);

        let atom = LeafMeasure::atomic(root, vec![(0, 1.0)]).unwrap();
        let f = build_principal_cubes(&one, Some(&atom), root.root()).unwrap();
        assert_eq!(f.cubes(), vec![root.root()]);
        let empty = LeafMeasure::atomic(root, vec![]).unwrap();
        assert!(matches!(
            build_principal_cubes(&one, Some(&empty), root.root()),
            Err(DtlError::ZeroMeasure)
        ));
        let sub = build_principal_cubes(&one, None, c1(1, 0)).unwrap();
        assert_eq!(stopping_parent(&sub, c1(1, 1)), Err(DtlError::OutsideRoot));
    }

    #[test]
    fn classification_examples() {
        let root = RootSpec::new(1, 3).unwrap();
        let one = LeafField::constant(root, 1.0).unwrap();
        let flat = build_principal_cubes(&one, None, root.root()).unwrap();
        let c = classify_children(&flat, &flat, root.root()).unwrap();
        assert!(c.first.is_empty() && c.second.is_empty() && c.third.is_empty() && c.remainder.is_empty());

        let spike = LeafField::indicator(root, root.leaf(0)).unwrap();
        let g = build_principal_cubes(&spike, None, root.root()).unwrap();
        let c = classify_children(&g, &flat, root.root()).unwrap();
        assert_eq!(c.second, vec![c1(2, 0)]);
        assert!(c.first.is_empty() && c.third.is_empty() && c.remainder.is_empty());
        assert_eq!(classify_children(&g, &flat, c1(1, 0)), Err(DtlError::NotAPrincipalCube));

        // f^G: raw values off [0,1/4), the child average on it.
        let f = LeafField::new(root, vec![4.0, 0.0, 1.0, 2.0, 3.0, 0.0, 5.0, 1.0]).unwrap();
        let proj = corona_projection(&f, &g, &c, root.root()).unwrap();
        assert_eq!(proj.values(), &[2.0, 2.0, 1.0, 2.0, 3.0, 0.0, 5.0, 1.0]);
    }
}
