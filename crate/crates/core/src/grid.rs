//! Truncated dyadic grid over the root cube `[0,1)^n`.
//!
//! A cube is stored as its level together with the Morton code of its index
//! vector, so the `2^n` children of a cube are contiguous and child order is
//! the lexicographic order of the offset bits (first coordinate most
//! significant). Leaf data is exposed in row-major order over index vectors;
//! the conversion happens at the boundary.
//!
//! All per-cube tables in this crate are laid out level by level
//! (`level_offset(k) + code`).

use std::cmp::Ordering;

use crate::error::{DtlError, Result};

/// Default bound on `2^{nL}`.
pub const DEFAULT_LEAF_CAP: u64 = 1 << 24;

/// Dimension and depth of the truncated tree. The side of the root is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RootSpec {
    dim: usize,
    depth: u32,
}

impl RootSpec {
    pub fn new(dim: usize, depth: u32) -> Result<Self> {
        Self::with_cap(dim, depth, DEFAULT_LEAF_CAP)
    }

    pub fn with_cap(dim: usize, depth: u32, cap: u64) -> Result<Self> {
        if dim == 0 {
            return Err(DtlError::ShapeMismatch { expected: 1, got: 0 });
        }
        let bits = dim as u64 * depth as u64;
        if bits >= 63 || (1u64 << bits) > cap {
            return Err(DtlError::LeafCapExceeded { dim, depth, cap });
        }
        Ok(Self { dim, depth })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        1usize << (self.dim as u32 * self.depth)
    }

    /// Number of cubes at `level`.
    pub fn level_len(&self, level: u32) -> usize {
        1usize << (self.dim as u32 * level)
    }

    /// Position of the first cube of `level` in a per-cube table.
    pub fn level_offset(&self, level: u32) -> usize {
        let fan = (1usize << self.dim) - 1;
        (self.level_len(level) - 1) / fan
    }

    /// Number of cubes of levels `0..=depth`.
    pub fn cube_count(&self) -> usize {
        self.level_offset(self.depth + 1)
    }

    pub fn leaf_side(&self) -> f64 {
        pow2(-(self.depth as i32))
    }

    pub fn leaf_volume(&self) -> f64 {
        pow2(-((self.dim as u32 * self.depth) as i32))
    }

    pub fn root(&self) -> CubeAddr {
        CubeAddr::root(self.dim)
    }

    /// Whether `q` is a cube of this tree.
    pub fn holds(&self, q: CubeAddr) -> bool {
        q.dim() == self.dim
            && q.level() <= self.depth
            && q.code() < (1u64 << (self.dim as u32 * q.level()))
    }

    pub fn check(&self, q: CubeAddr) -> Result<()> {
        if self.holds(q) {
            Ok(())
        } else {
            Err(DtlError::OutOfRangeCube { level: q.level() })
        }
    }

    /// Table position of `q`; `q` must belong to the tree.
    pub fn position(&self, q: CubeAddr) -> usize {
        debug_assert!(self.holds(q));
        self.level_offset(q.level()) + q.code() as usize
    }

    /// Inverse of [`RootSpec::position`].
    pub fn cube_at_position(&self, pos: usize) -> CubeAddr {
        let mut level = 0;
        while self.level_offset(level + 1) <= pos {
            level += 1;
        }
        CubeAddr::from_code(self.dim, level, (pos - self.level_offset(level)) as u64)
    }

    /// Cubes of one level in Morton order.
    pub fn cubes_at(&self, level: u32) -> impl Iterator<Item = CubeAddr> {
        let dim = self.dim;
        (0..self.level_len(level) as u64).map(move |c| CubeAddr::from_code(dim, level, c))
    }

    /// All cubes, level by level.
    pub fn cubes(&self) -> impl Iterator<Item = CubeAddr> {
        let this = *self;
        (0..=self.depth).flat_map(move |k| this.cubes_at(k))
    }

    /// Leaf cube with the given row-major leaf index.
    pub fn leaf(&self, row_major: usize) -> CubeAddr {
        let l = self.depth;
        let mask = (1u64 << l) - 1;
        let mut index = vec![0u32; self.dim];
        let mut r = row_major as u64;
        for d in (0..self.dim).rev() {
            index[d] = (r & mask) as u32;
            r >>= l;
        }
        CubeAddr::from_index_unchecked(l, &index)
    }

    /// `perm[morton] = row_major` for the leaves.
    pub fn morton_to_row_major(&self) -> Vec<usize> {
        let l = self.depth;
        (0..self.leaf_count() as u64)
            .map(|c| CubeAddr::from_code(self.dim, l, c).row_major() as usize)
            .collect()
    }

    pub fn to_morton(&self, row_major_values: &[f64]) -> Vec<f64> {
        if self.dim == 1 {
            return row_major_values.to_vec();
        }
        self.morton_to_row_major().into_iter().map(|r| row_major_values[r]).collect()
    }

    pub fn from_morton(&self, morton_values: &[f64]) -> Vec<f64> {
        if self.dim == 1 {
            return morton_values.to_vec();
        }
        let mut out = vec![0.0; morton_values.len()];
        for (m, r) in self.morton_to_row_major().into_iter().enumerate() {
            out[r] = morton_values[m];
        }
        out
    }

    /// Range of leaf Morton codes inside `q`.
    pub fn leaf_code_range(&self, q: CubeAddr) -> std::ops::Range<u64> {
        let shift = self.dim as u32 * (self.depth - q.level());
        (q.code() << shift)..((q.code() + 1) << shift)
    }

    /// Row-major indices of the leaves inside `q`, sorted.
    pub fn leaves_in(&self, q: CubeAddr) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .leaf_code_range(q)
            .map(|c| CubeAddr::from_code(self.dim, self.depth, c).row_major() as usize)
            .collect();
        out.sort_unstable();
        out
    }

    /// Number of leaves inside `q`, i.e. `|q|` in units of the leaf volume.
    pub fn leaf_units(&self, q: CubeAddr) -> u64 {
        1u64 << (self.dim as u32 * (self.depth - q.level()))
    }

    /// Children of `q`, empty for leaves.
    pub fn children(&self, q: CubeAddr) -> Vec<CubeAddr> {
        if q.level() >= self.depth {
            Vec::new()
        } else {
            q.children().collect()
        }
    }
}

/// Exact power of two.
pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// A dyadic cube `2^{-k}(i + [0,1)^n)`.
///
/// Ordering is by level, then by the row-major index at that level; this is
/// the tie-break order used for witness cubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CubeAddr {
    dim: u8,
    level: u8,
    code: u64,
}

impl CubeAddr {
    pub fn root(dim: usize) -> Self {
        Self::from_code(dim, 0, 0)
    }

    pub fn from_code(dim: usize, level: u32, code: u64) -> Self {
        debug_assert!((1..64).contains(&dim) && level < 64);
        Self { dim: dim as u8, level: level as u8, code }
    }

    /// Cube with the given index vector; every entry must be below `2^level`.
    pub fn from_index(level: u32, index: &[u32]) -> Result<Self> {
        if index.is_empty() || level >= 32 || index.len() as u32 * level >= 64 {
            return Err(DtlError::OutOfRangeCube { level });
        }
        if index.iter().any(|&i| (i as u64) >= (1u64 << level)) {
            return Err(DtlError::OutOfRangeCube { level });
        }
        Ok(Self::from_index_unchecked(level, index))
    }

    fn from_index_unchecked(level: u32, index: &[u32]) -> Self {
        let mut code = 0u64;
        for b in (0..level).rev() {
            for &i in index {
                code = (code << 1) | ((i >> b) & 1) as u64;
            }
        }
        Self::from_code(index.len(), level, code)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn level(&self) -> u32 {
        self.level as u32
    }

    /// Morton code at this level.
    pub fn code(&self) -> u64 {
        self.code
    }

    pub fn index(&self) -> Vec<u32> {
        let n = self.dim();
        let mut index = vec![0u32; n];
        for b in 0..self.level() {
            let group = self.code >> (b as usize * n);
            for (d, slot) in index.iter_mut().enumerate() {
                let bit = (group >> (n - 1 - d)) & 1;
                *slot |= (bit as u32) << b;
            }
        }
        index
    }

    /// Row-major rank of the index vector among the cubes of this level.
    pub fn row_major(&self) -> u64 {
        if self.dim == 1 {
            return self.code;
        }
        self.index()
            .into_iter()
            .fold(0u64, |acc, i| (acc << self.level()) | i as u64)
    }

    pub fn side(&self) -> f64 {
        pow2(-(self.level() as i32))
    }

    pub fn volume(&self) -> f64 {
        pow2(-((self.dim() as u32 * self.level()) as i32))
    }

    pub fn corner(&self) -> Vec<f64> {
        let s = self.side();
        self.index().into_iter().map(|i| i as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.index().into_iter().map(|i| (i as f64 + 0.5) * s).collect()
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }

    pub fn parent(&self) -> Result<Self> {
        if self.level == 0 {
            return Err(DtlError::NoParent);
        }
        Ok(self.ancestor_at(self.level() - 1))
    }

    /// The ancestor at `level` (itself when `level == self.level()`).
    pub fn ancestor_at(&self, level: u32) -> Self {
        debug_assert!(level <= self.level());
        let shift = self.dim() as u32 * (self.level() - level);
        Self::from_code(self.dim(), level, self.code >> shift)
    }

    /// Strict ancestors, nearest first, ending at the root.
    pub fn ancestors(&self) -> Vec<Self> {
        (0..self.level()).rev().map(|k| self.ancestor_at(k)).collect()
    }

    /// The `2^n` children in canonical order, regardless of tree depth.
    pub fn children(&self) -> impl Iterator<Item = Self> {
        let n = self.dim();
        let level = self.level() + 1;
        let base = self.code << n;
        (0..(1u64 << n)).map(move |b| Self::from_code(n, level, base + b))
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Self) -> bool {
        self.dim == other.dim
            && other.level >= self.level
            && other.ancestor_at(self.level()).code == self.code
    }

    /// `other ⊊ self`.
    pub fn strictly_contains(&self, other: &Self) -> bool {
        other.level > self.level && self.contains(other)
    }

    /// Cube at the same level shifted by `offset` (in units of the side), if it
    /// stays inside the root.
    pub fn neighbor(&self, offset: &[i64]) -> Option<Self> {
        let limit = 1i64 << self.level();
        let mut index = self.index();
        for (slot, &o) in index.iter_mut().zip(offset) {
            let v = *slot as i64 + o;
            if v < 0 || v >= limit {
                return None;
            }
            *slot = v as u32;
        }
        Some(Self::from_index_unchecked(self.level(), &index))
    }
}

impl Ord for CubeAddr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.level.cmp(&other.level))
            .then_with(|| self.row_major().cmp(&other.row_major()))
    }
}

impl PartialOrd for CubeAddr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Relations understood by [`navigate`].
#[derive(Debug, Clone, Copy)]
pub enum Relation<'a> {
    Parent,
    Children,
    Ancestors,
    /// Members of the given family contained in the cube.
    Restriction(&'a [CubeAddr]),
}

pub fn navigate(root: &RootSpec, q: CubeAddr, rel: Relation<'_>) -> Result<Vec<CubeAddr>> {
    root.check(q)?;
    match rel {
        Relation::Parent => Ok(vec![q.parent()?]),
        Relation::Children => Ok(root.children(q)),
        Relation::Ancestors => Ok(q.ancestors()),
        Relation::Restriction(family) => {
            Ok(family.iter().copied().filter(|c| q.contains(c)).collect())
        }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    for (leaf, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(DtlError::NonFinite { leaf });
        }
        if v < 0.0 {
            return Err(DtlError::NegativeValue { leaf, value: v });
        }
    }
    Ok(())
}

/// Nonnegative function, constant on each leaf, in row-major leaf order.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafField {
    root: RootSpec,
    values: Vec<f64>,
}

impl LeafField {
    pub fn new(root: RootSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != root.leaf_count() {
            return Err(DtlError::ShapeMismatch { expected: root.leaf_count(), got: values.len() });
        }
        check_values(&values)?;
        Ok(Self { root, values })
    }

    pub(crate) fn from_trusted(root: RootSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), root.leaf_count());
        Self { root, values }
    }

    pub(crate) fn from_morton(root: RootSpec, morton_values: &[f64]) -> Self {
        Self::from_trusted(root, root.from_morton(morton_values))
    }

    pub fn constant(root: RootSpec, value: f64) -> Result<Self> {
        Self::new(root, vec![value; root.leaf_count()])
    }

    /// Indicator of the leaves inside `q`.
    pub fn indicator(root: RootSpec, q: CubeAddr) -> Result<Self> {
        root.check(q)?;
        let mut values = vec![0.0; root.leaf_count()];
        for leaf in root.leaves_in(q) {
            values[leaf] = 1.0;
        }
        Ok(Self { root, values })
    }

    pub fn root(&self) -> RootSpec {
        self.root
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, leaf: usize) -> f64 {
        self.values[leaf]
    }

    pub fn morton_values(&self) -> Vec<f64> {
        self.root.to_morton(&self.values)
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.root, self.values.iter().map(|v| v * t).collect())
    }

    pub fn powf(&self, p: f64) -> Self {
        Self::from_trusted(self.root, self.values.iter().map(|v| v.powf(p)).collect())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// A finite measure given by leaf data.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafMeasure {
    /// `w dx` with `w` constant on leaves.
    Density(LeafField),
    /// Point masses, each attached to a leaf (row-major index).
    Atomic { root: RootSpec, atoms: Vec<(usize, f64)> },
}

impl LeafMeasure {
    pub fn lebesgue(root: RootSpec) -> Self {
        Self::Density(LeafField::from_trusted(root, vec![1.0; root.leaf_count()]))
    }

    pub fn atomic(root: RootSpec, atoms: Vec<(usize, f64)>) -> Result<Self> {
        for &(leaf, mass) in &atoms {
            if leaf >= root.leaf_count() {
                return Err(DtlError::ShapeMismatch { expected: root.leaf_count(), got: leaf + 1 });
            }
            if !mass.is_finite() {
                return Err(DtlError::NonFinite { leaf });
            }
            if mass < 0.0 {
                return Err(DtlError::NegativeValue { leaf, value: mass });
            }
        }
        Ok(Self::Atomic { root, atoms })
    }

    pub fn root(&self) -> RootSpec {
        match self {
            Self::Density(w) => w.root(),
            Self::Atomic { root, .. } => *root,
        }
    }

    pub fn is_density(&self) -> bool {
        matches!(self, Self::Density(_))
    }

    pub fn density(&self) -> Option<&LeafField> {
        match self {
            Self::Density(w) => Some(w),
            Self::Atomic { .. } => None,
        }
    }

    /// Mass carried by each leaf cell, row-major.
    pub fn leaf_masses(&self) -> Vec<f64> {
        match self {
            Self::Density(w) => {
                let h = w.root().leaf_volume();
                w.values().iter().map(|v| v * h).collect()
            }
            Self::Atomic { root, atoms } => {
                let mut m = vec![0.0; root.leaf_count()];
                for &(leaf, mass) in atoms {
                    m[leaf] += mass;
                }
                m
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.leaf_masses().iter().sum()
    }

    /// `μ^r`, defined for densities only.
    pub fn power(&self, r: f64) -> Result<Self> {
        match self {
            Self::Density(w) => Ok(Self::Density(w.powf(r))),
            Self::Atomic { .. } => Err(DtlError::AtomicPowerUndefined),
        }
    }

    /// Leaf masses of `g^p dμ`, row-major.
    pub fn weighted_masses(&self, g: &LeafField, p: f64) -> Result<Vec<f64>> {
        if g.root() != self.root() {
            return Err(DtlError::RootMismatch);
        }
        Ok(self
            .leaf_masses()
            .into_iter()
            .zip(g.values())
            .map(|(m, v)| if m == 0.0 { 0.0 } else { v.powf(p) * m })
            .collect())
    }
}

/// Raw leaf data accepted by [`ingest`].
#[derive(Debug, Clone, PartialEq)]
pub enum RawLeafData {
    Field(Vec<f64>),
    Density(Vec<f64>),
    Atomic(Vec<(usize, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ingested {
    Field(LeafField),
    Measure(LeafMeasure),
}

pub fn ingest(root: RootSpec, raw: RawLeafData) -> Result<Ingested> {
    match raw {
        RawLeafData::Field(v) => Ok(Ingested::Field(LeafField::new(root, v)?)),
        RawLeafData::Density(v) => {
            Ok(Ingested::Measure(LeafMeasure::Density(LeafField::new(root, v)?)))
        }
        RawLeafData::Atomic(a) => Ok(Ingested::Measure(LeafMeasure::atomic(root, a)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Field,
    Measure,
}

/// `(sum, average)` of a cube; `mass` repeats `sum` for measure aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeStats {
    pub sum: f64,
    pub average: f64,
    pub mass: Option<f64>,
}

/// Sums over every cube of the tree, built bottom-up.
///
/// Each parent entry is the left-to-right sum of its children in canonical
/// order, so parent/child consistency holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeAggregate {
    root: RootSpec,
    kind: AggregateKind,
    sums: Vec<f64>,
}

impl TreeAggregate {
    /// Aggregate of arbitrary nonnegative leaf masses given in row-major order.
    pub fn from_leaf_masses(root: RootSpec, masses: &[f64], kind: AggregateKind) -> Result<Self> {
        if masses.len() != root.leaf_count() {
            return Err(DtlError::ShapeMismatch { expected: root.leaf_count(), got: masses.len() });
        }
        check_values(masses)?;
        Ok(Self::build(root, &root.to_morton(masses), kind))
    }

    fn build(root: RootSpec, morton_leaves: &[f64], kind: AggregateKind) -> Self {
        let n = root.dim();
        let fan = 1usize << n;
        let mut sums = vec![0.0; root.cube_count()];
        let leaf_off = root.level_offset(root.depth());
        sums[leaf_off..].copy_from_slice(morton_leaves);
        for k in (0..root.depth()).rev() {
            let off = root.level_offset(k);
            let child_off = root.level_offset(k + 1);
            for c in 0..root.level_len(k) {
                let first = child_off + c * fan;
                let mut s = 0.0;
                for j in 0..fan {
                    s += sums[first + j];
                }
                sums[off + c] = s;
            }
        }
        Self { root, kind, sums }
    }

    /// `∫_Q f dx` for every cube.
    pub fn of_field(f: &LeafField) -> Self {
        let h = f.root().leaf_volume();
        let m: Vec<f64> = f.morton_values().into_iter().map(|v| v * h).collect();
        Self::build(f.root(), &m, AggregateKind::Field)
    }

    /// `∫_Q f^p dx` for every cube.
    pub fn of_power(f: &LeafField, p: f64) -> Self {
        Self::of_field(&f.powf(p))
    }

    /// `μ(Q)` for every cube.
    pub fn of_measure(mu: &LeafMeasure) -> Self {
        let root = mu.root();
        Self::build(root, &root.to_morton(&mu.leaf_masses()), AggregateKind::Measure)
    }

    /// `∫_Q g^p dμ` for every cube.
    pub fn of_weighted(g: &LeafField, p: f64, mu: &LeafMeasure) -> Result<Self> {
        let root = mu.root();
        let m = mu.weighted_masses(g, p)?;
        Ok(Self::build(root, &root.to_morton(&m), AggregateKind::Field))
    }

    pub fn root(&self) -> RootSpec {
        self.root
    }

    pub fn kind(&self) -> AggregateKind {
        self.kind
    }

    /// Sum over `q`; `q` must belong to the tree.
    pub fn mass(&self, q: CubeAddr) -> f64 {
        self.sums[self.root.position(q)]
    }

    pub fn total(&self) -> f64 {
        self.sums[0]
    }

    /// Entries of one level in Morton order.
    pub fn level(&self, k: u32) -> &[f64] {
        let off = self.root.level_offset(k);
        &self.sums[off..off + self.root.level_len(k)]
    }

    /// Entire table in position order.
    pub fn table(&self) -> &[f64] {
        &self.sums
    }

    pub fn stats(&self, q: CubeAddr) -> Result<CubeStats> {
        self.root.check(q)?;
        let sum = self.mass(q);
        Ok(CubeStats {
            sum,
            average: sum / q.volume(),
            mass: (self.kind == AggregateKind::Measure).then_some(sum),
        })
    }
}

pub fn cube_stats(agg: &TreeAggregate, q: CubeAddr) -> Result<CubeStats> {
    agg.stats(q)
}

/// Sum of the aggregated quantity over `3Q ∩ [0,1)^n`.
///
/// `3Q` clipped to the root is exactly the union of the same-level
/// neighbours of `Q`, so the sum is read off the aggregate.
pub fn enlarged_sum(agg: &TreeAggregate, q: CubeAddr) -> Result<f64> {
    let root = agg.root();
    root.check(q)?;
    let n = root.dim();
    let mut total = 0.0;
    let mut offset = vec![-1i64; n];
    loop {
        if let Some(nb) = q.neighbor(&offset) {
            total += agg.mass(nb);
        }
        let mut d = n;
        loop {
            if d == 0 {
                return Ok(total);
            }
            d -= 1;
            if offset[d] < 1 {
                offset[d] += 1;
                break;
            }
            offset[d] = -1;
        }
    }
}
