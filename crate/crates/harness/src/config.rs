//! Profile files and experiment specifications.

use std::ops::RangeInclusive;

use dtl_core::{ExponentProfile, RootSpec, DEFAULT_LEAF_CAP};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};
use crate::generate::{GeneratorConfig, GeneratorKind};

/// Exponents for the single-function inequalities around the modified Morrey
/// norm: `p > 1`, `0 < α < n` and `p < q ≤ n/α` (default `q = n/α`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarExponents {
    pub p: f64,
    pub alpha: f64,
    #[serde(default)]
    pub q: Option<f64>,
}

impl Default for ScalarExponents {
    fn default() -> Self {
        Self { p: 2.0, alpha: 0.4, q: None }
    }
}

/// `p₀ ≥ p₁ ≥ p₂ > 0` for Morrey nesting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestingExponents {
    pub p1: f64,
    pub p2: f64,
    pub p0: f64,
}

/// Profile JSON; `n` comes from the grid and `m` from `p_vec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub alpha: f64,
    pub beta: f64,
    pub p_vec: Vec<f64>,
    pub p0: f64,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub scalar: Option<ScalarExponents>,
    #[serde(default)]
    pub nesting: Option<NestingExponents>,
}

impl Default for ProfileFile {
    /// `m = 2` with `p = 1.2`, valid for `n ≥ 2`.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            p_vec: vec![2.4, 2.4],
            p0: 1.5,
            r: Some(2.0),
            scalar: None,
            nesting: None,
        }
    }
}

impl ProfileFile {
    pub fn profile(&self, n: usize) -> HarnessResult<ExponentProfile> {
        Ok(ExponentProfile::new(n, self.alpha, self.beta, self.p_vec.clone(), self.p0, self.r)?)
    }

    pub fn m(&self) -> usize {
        self.p_vec.len()
    }

    /// `1/p = Σ 1/p_i`.
    pub fn p(&self) -> f64 {
        1.0 / self.p_vec.iter().map(|p| 1.0 / p).sum::<f64>()
    }

    /// Built-in profile for a dimension: `m = 1` on the line, `m = 2` above.
    pub fn default_for(n: usize) -> Self {
        if n == 1 {
            Self {
                alpha: 0.5,
                beta: 0.25,
                p_vec: vec![1.2],
                p0: 1.25,
                r: Some(2.0),
                scalar: None,
                nesting: None,
            }
        } else {
            Self::default()
        }
    }

    pub fn scalar(&self) -> ScalarExponents {
        self.scalar.unwrap_or_default()
    }

    pub fn from_json(text: &str) -> HarnessResult<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub dims: Vec<usize>,
    pub depths: Vec<u32>,
    /// `None` picks [`ProfileFile::default_for`] at each dimension.
    pub profile: Option<ProfileFile>,
    /// Cycled by trial index.
    pub field_kinds: Vec<GeneratorKind>,
    pub measure_kinds: Vec<GeneratorKind>,
    pub trials: usize,
    pub seed: u64,
    pub generator: GeneratorConfig,
    /// Leaf and kernel-work cap; `DTL_WORK_CAP` overrides the default.
    pub work_cap: u64,
}

impl ExperimentSpec {
    pub fn new(id: &str, dims: Vec<usize>, depths: RangeInclusive<u32>, profile: Option<ProfileFile>) -> Self {
        Self {
            id: id.to_string(),
            dims,
            depths: depths.collect(),
            profile,
            field_kinds: vec![
                GeneratorKind::Uniform,
                GeneratorKind::PowerSpike,
                GeneratorKind::SparseSpikes,
                GeneratorKind::Constant,
            ],
            measure_kinds: vec![GeneratorKind::DensityMeasure, GeneratorKind::AtomMeasure],
            trials: 20,
            seed: 0,
            generator: GeneratorConfig::default(),
            work_cap: work_cap_from_env(),
        }
    }

    pub fn profile_for(&self, n: usize) -> ProfileFile {
        self.profile.clone().unwrap_or_else(|| ProfileFile::default_for(n))
    }

    /// Generator settings with the power-spike bound taken from the profile.
    pub fn generator_for(&self, file: &ProfileFile) -> GeneratorConfig {
        let p_bar = file.p_vec.iter().cloned().fold(1.0, f64::max);
        GeneratorConfig { p_bar, ..self.generator }
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if self.dims.is_empty() || self.depths.is_empty() {
            return Err(HarnessError::Config("dims and depths must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be positive".into()));
        }
        if self.field_kinds.is_empty() || self.measure_kinds.is_empty() {
            return Err(HarnessError::Config("generator kind lists must be nonempty".into()));
        }
        if let Some(k) = self.field_kinds.iter().find(|k| k.is_measure_only()) {
            return Err(HarnessError::BadKind(format!("{k} cannot generate a field")));
        }
        crate::registry::lookup(&self.id)?;
        for &n in &self.dims {
            for &l in &self.depths {
                RootSpec::with_cap(n, l, self.work_cap)?;
            }
        }
        Ok(())
    }
}

/// `DTL_WORK_CAP` if set and parseable, else the default leaf cap.
pub fn work_cap_from_env() -> u64 {
    std::env::var("DTL_WORK_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_LEAF_CAP)
}

/// Parses `a..b`, `a..=b` or a comma list.
pub fn parse_depths(s: &str) -> HarnessResult<Vec<u32>> {
    let bad = || HarnessError::Config(format!("bad depth list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> HarnessResult<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| HarnessError::Config(format!("bad list entry `{t}`"))))
        .collect()
}
