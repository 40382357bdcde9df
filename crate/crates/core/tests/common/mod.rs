#![allow(dead_code)]

use dtl_core::oracle::Cube;
use dtl_core::{CubeAddr, LeafField, LeafMeasure, RootSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonnegative values with a mix of zeros, plateaus and a spike.
pub fn values(rng: &mut ChaCha8Rng, root: &RootSpec) -> Vec<f64> {
    let n = root.leaf_count();
    let style = rng.gen_range(0..4);
    let mut v: Vec<f64> = (0..n)
        .map(|_| match style {
            0 => rng.gen::<f64>(),
            1 => if rng.gen_bool(0.4) { 0.0 } else { rng.gen::<f64>() * 3.0 },
            2 => rng.gen::<f64>().powi(4),
            _ => 0.5 + rng.gen::<f64>(),
        })
        .collect();
    let spike = rng.gen_range(0..n);
    v[spike] += rng.gen::<f64>() * n as f64;
    v
}

pub fn field(rng: &mut ChaCha8Rng, root: &RootSpec) -> LeafField {
    LeafField::new(*root, values(rng, root)).unwrap()
}

pub fn positive_field(rng: &mut ChaCha8Rng, root: &RootSpec) -> LeafField {
    let v = (0..root.leaf_count()).map(|_| 0.05 + rng.gen::<f64>() * 4.0).collect();
    LeafField::new(*root, v).unwrap()
}

pub fn measure(rng: &mut ChaCha8Rng, root: &RootSpec) -> LeafMeasure {
    if rng.gen_bool(0.5) {
        LeafMeasure::Density(field(rng, root))
    } else {
        let k = rng.gen_range(1..=4);
        let atoms = (0..k)
            .map(|_| (rng.gen_range(0..root.leaf_count()), 0.1 + rng.gen::<f64>()))
            .collect();
        LeafMeasure::atomic(*root, atoms).unwrap()
    }
}

pub fn to_oracle(q: CubeAddr) -> Cube {
    (q.level(), q.index().into_iter().map(u64::from).collect())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[track_caller]
pub fn assert_rel(a: f64, b: f64, what: &str) {
    assert!(rel_close(a, b, 1e-12), "{what}: {a} vs oracle {b}");
}

#[track_caller]
pub fn assert_fields(a: &[f64], b: &[f64], what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!(rel_close(*x, *y, 1e-12), "{what} leaf {i}: {x} vs oracle {y}");
    }
}

/// All `(n, L)` grids covered by the oracle comparisons.
pub fn grids() -> Vec<RootSpec> {
    let mut out = Vec::new();
    for n in 1..=2 {
        for l in 0..=4 {
            out.push(RootSpec::new(n, l).unwrap());
        }
    }
    out
}
