//! Seeded input generators.

use std::fmt;
use std::str::FromStr;

use dtl_core::{LeafField, LeafMeasure, RootSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Constant,
    Uniform,
    PowerSpike,
    SparseSpikes,
    AtomMeasure,
    DensityMeasure,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 6] = [
        Self::Constant,
        Self::Uniform,
        Self::PowerSpike,
        Self::SparseSpikes,
        Self::AtomMeasure,
        Self::DensityMeasure,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Uniform => "uniform",
            Self::PowerSpike => "power-spike",
            Self::SparseSpikes => "sparse-spikes",
            Self::AtomMeasure => "atom-measure",
            Self::DensityMeasure => "density-measure",
        }
    }

    /// Kinds that only make sense as measures.
    pub fn is_measure_only(&self) -> bool {
        matches!(self, Self::AtomMeasure | Self::DensityMeasure)
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::BadKind(s.to_string()))
    }
}

/// Shape parameters for the generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Power-spike exponent as a fraction of `n/p̄`; must be below 1.
    pub gamma_fraction: f64,
    /// `p̄` in the power-spike bound `γ < n/p̄`.
    pub p_bar: f64,
    /// Subgrid points per axis for the singular cell of a power spike.
    pub subgrid: usize,
    pub max_spikes: usize,
    pub max_atoms: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { gamma_fraction: 0.8, p_bar: 2.0, subgrid: 4, max_spikes: 4, max_atoms: 4 }
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One step of the splitmix64 sequence.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one generator call, decorrelated across every coordinate.
pub fn trial_seed(seed: u64, dim: usize, depth: u32, trial: usize, slot: usize) -> u64 {
    [dim as u64, depth as u64, trial as u64, slot as u64]
        .into_iter()
        .fold(splitmix64(seed), |h, v| splitmix64(h ^ v))
}

fn leaf_centers(root: &RootSpec) -> impl Iterator<Item = Vec<f64>> + '_ {
    (0..root.leaf_count()).map(move |i| root.leaf(i).center())
}

fn power_spike(root: &RootSpec, rng: &mut ChaCha8Rng, cfg: &GeneratorConfig) -> Vec<f64> {
    let n = root.dim();
    let gamma = cfg.gamma_fraction * n as f64 / cfg.p_bar;
    let x0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let dist = |x: &[f64]| x.iter().zip(&x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let h = root.leaf_side();
    let singular: Vec<u32> = x0.iter().map(|c| ((c / h) as u32).min((1 << root.depth()) - 1)).collect();
    let mut values: Vec<f64> = leaf_centers(root).map(|c| dist(&c).powf(-gamma)).collect();
    // The cell holding x0 takes the largest value over a subgrid of its points.
    let cell = dtl_core::CubeAddr::from_index(root.depth(), &singular).expect("index inside the grid");
    let corner = cell.corner();
    let k = cfg.subgrid.max(1);
    let mut best = 0.0f64;
    for t in 0..k.pow(n as u32) {
        let mut rest = t;
        let pt: Vec<f64> = (0..n)
            .map(|d| {
                let j = rest % k;
                rest /= k;
                corner[d] + (j as f64 + 0.5) * h / k as f64
            })
            .collect();
        best = best.max(dist(&pt).powf(-gamma));
    }
    values[cell.row_major() as usize] = best;
    values
}

fn sparse_spikes(root: &RootSpec, rng: &mut ChaCha8Rng, cfg: &GeneratorConfig) -> Vec<f64> {
    let mut v = vec![0.0; root.leaf_count()];
    let k = rng.gen_range(1..=cfg.max_spikes.max(1));
    let top = (root.leaf_count() as f64).sqrt();
    for _ in 0..k {
        let i = rng.gen_range(0..root.leaf_count());
        v[i] += top.powf(rng.gen::<f64>());
    }
    v
}

pub fn generate_field(
    kind: GeneratorKind,
    root: &RootSpec,
    seed: u64,
    cfg: &GeneratorConfig,
) -> HarnessResult<LeafField> {
    let mut rng = rng_for(seed);
    let values = match kind {
        GeneratorKind::Constant => vec![1.0; root.leaf_count()],
        GeneratorKind::Uniform => (0..root.leaf_count()).map(|_| rng.gen::<f64>()).collect(),
        GeneratorKind::PowerSpike => power_spike(root, &mut rng, cfg),
        GeneratorKind::SparseSpikes => sparse_spikes(root, &mut rng, cfg),
        GeneratorKind::AtomMeasure | GeneratorKind::DensityMeasure => {
            return Err(HarnessError::BadKind(format!("{kind} is a measure kind")))
        }
    };
    Ok(LeafField::new(*root, values)?)
}

/// Measures; field kinds yield their field as a density.
pub fn generate_measure(
    kind: GeneratorKind,
    root: &RootSpec,
    seed: u64,
    cfg: &GeneratorConfig,
) -> HarnessResult<LeafMeasure> {
    match kind {
        GeneratorKind::AtomMeasure => {
            let mut rng = rng_for(seed);
            let k = rng.gen_range(1..=cfg.max_atoms.max(1));
            let atoms = (0..k)
                .map(|_| (rng.gen_range(0..root.leaf_count()), 0.1 + 0.9 * rng.gen::<f64>()))
                .collect();
            Ok(LeafMeasure::atomic(*root, atoms)?)
        }
        GeneratorKind::DensityMeasure => {
            let mut rng = rng_for(seed);
            let v = (0..root.leaf_count()).map(|_| 0.1 + 3.0 * rng.gen::<f64>().powi(2)).collect();
            Ok(LeafMeasure::Density(LeafField::new(*root, v)?))
        }
        GeneratorKind::Constant => Ok(LeafMeasure::lebesgue(*root)),
        _ => Ok(LeafMeasure::Density(generate_field(kind, root, seed, cfg)?)),
    }
}
