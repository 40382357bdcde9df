//! Aggregate-based evaluations against the naive leaf-loop oracle on every
//! grid with n ∈ {1,2}, L ≤ 4, for 100 seeds each.

mod common;

use common::*;
use dtl_core::constants::{
    a0_constant, adams_constant, ap_characteristic, ks_testing_constant, A0Exponents, A0Form,
    ApExponent,
};
use dtl_core::norms::{
    lebesgue_norm, modified_morrey_norm, morrey_norm, product_morrey_norm, radon_morrey_norm,
};
use dtl_core::operators::{
    discretization_majorant, dyadic_integral_operator, fractional_maximal, multilinear_maximal,
    mu_maximal, KernelWeight,
};
use dtl_core::oracle;
use dtl_core::{cube_stats, enlarged_sum, TreeAggregate};
use rand::Rng;

const SEEDS: u64 = 100;

fn for_all(mut body: impl FnMut(u64, &dtl_core::RootSpec)) {
    for root in grids() {
        for seed in 0..SEEDS {
            body(seed, &root);
        }
    }
}

#[test]
fn cube_sums_and_enlarged_sums() {
    for_all(|seed, root| {
        let mut r = rng(seed);
        let f = field(&mut r, root);
        let agg = TreeAggregate::of_field(&f);
        for q in root.cubes() {
            let oq = to_oracle(q);
            let want = oracle::integral(root, f.values(), &oq);
            let st = cube_stats(&agg, q).unwrap();
            assert_rel(st.sum, want, "cube sum");
            assert_rel(st.average, want / oracle::volume(root, &oq), "cube average");
            let e = enlarged_sum(&agg, q).unwrap();
            assert_rel(e, oracle::enlarged_integral(root, f.values(), &oq), "enlarged sum");
        }
        let mu = measure(&mut r, root);
        let magg = TreeAggregate::of_measure(&mu);
        let masses = oracle::masses(&mu);
        for q in root.cubes() {
            let st = cube_stats(&magg, q).unwrap();
            let want = oracle::mass(root, &masses, &to_oracle(q));
            assert_rel(st.sum, want, "cube mass");
            assert_eq!(st.mass, Some(st.sum));
        }
    });
}

#[test]
fn norms_match_oracle() {
    for_all(|seed, root| {
        let mut r = rng(1000 + seed);
        let f = field(&mut r, root);
        let g = field(&mut r, root);
        let mu = measure(&mut r, root);
        let p = 0.3 + 3.0 * r.gen::<f64>();
        let p0 = p * (1.0 + 2.0 * r.gen::<f64>());
        assert_rel(lebesgue_norm(&f, p, None).unwrap(), oracle::lebesgue(&f, p, None), "L^p dx");
        assert_rel(lebesgue_norm(&f, p, Some(&mu)).unwrap(), oracle::lebesgue(&f, p, Some(&mu)), "L^p dμ");
        assert_rel(morrey_norm(&f, p, p0).unwrap().value, oracle::morrey(&f, p, p0), "Morrey");
        let p_vec = [1.0 + 3.0 * r.gen::<f64>(), 1.0 + 3.0 * r.gen::<f64>()];
        let pp = 1.0 / (1.0 / p_vec[0] + 1.0 / p_vec[1]);
        let p0 = pp * (1.0 + r.gen::<f64>());
        let fields = [f.clone(), g.clone()];
        assert_rel(
            product_morrey_norm(&fields, &p_vec, p0).unwrap().value,
            oracle::product_morrey(&fields, &p_vec, p0),
            "product Morrey",
        );
        let q = 0.5 + 2.0 * r.gen::<f64>();
        let q0 = q * (1.0 + r.gen::<f64>());
        assert_rel(
            radon_morrey_norm(&g, q, q0, &mu).unwrap().value,
            oracle::radon_morrey(&g, q, q0, &mu),
            "Radon-Morrey",
        );
        let n = root.dim() as f64;
        let alpha = n * (0.05 + 0.9 * r.gen::<f64>());
        let p = 1.1 + 2.0 * r.gen::<f64>();
        assert_rel(modified_morrey_norm(&f, p, alpha).unwrap().value, oracle::modified_morrey(&f, p, alpha), "modified Morrey");
    });
}

#[test]
fn witnesses_attain_the_sup() {
    for_all(|seed, root| {
        let mut r = rng(5000 + seed);
        let f = field(&mut r, root);
        let s = morrey_norm(&f, 2.0, 3.0).unwrap();
        let oq = to_oracle(s.witness);
        let v = oracle::volume(root, &oq);
        let fp: Vec<f64> = f.values().iter().map(|x| x * x).collect();
        let at = v.powf(1.0 / 3.0) * (oracle::integral(root, &fp, &oq) / v).sqrt();
        assert!(rel_close(at, s.value, 1e-12), "witness value {at} vs {}", s.value);
    });
}

#[test]
fn exact_scan_constants_match_oracle() {
    for_all(|seed, root| {
        let mut r = rng(2000 + seed);
        let mu = measure(&mut r, root);
        let agg = TreeAggregate::of_measure(&mu);
        let masses = oracle::masses(&mu);
        let n = root.dim() as f64;
        let beta = n * (0.05 + 0.95 * r.gen::<f64>());
        assert_rel(adams_constant(&agg, beta).unwrap().value, oracle::adams(root, &masses, beta), "Adams");
        let beta = n * (0.05 + 0.9 * r.gen::<f64>());
        let p = 1.1 + 2.0 * r.gen::<f64>();
        assert_rel(
            ks_testing_constant(&agg, beta, p).unwrap().value,
            oracle::testing_constant(root, &masses, beta, p),
            "testing constant",
        );
        let m = r.gen_range(1..=2);
        let alpha = beta.max(0.1);
        let ex = A0Exponents { m, alpha, beta, p, r: Some(1.5) };
        let weight_a = oracle::density_scan(root, &masses, |k| 0.5f64.powf(k as f64 * beta), 1.0 / p);
        assert_rel(a0_constant(&mu, &ex, A0Form::WeightA, None).unwrap().value, weight_a, "A0 weight-a");
        let mn = m as f64 * n;
        let sparse_a = oracle::density_scan(
            root,
            &masses,
            |k| 0.5f64.powf(k as f64 * (alpha - mn)) * 0.5f64.powf(k as f64 * mn),
            1.0 / p,
        );
        assert_rel(a0_constant(&mu, &ex, A0Form::SparseA, None).unwrap().value, sparse_a, "A0 sparse-a");
        if let Some(d) = mu.density() {
            let lv = root.leaf_volume();
            let mr: Vec<f64> = d.values().iter().map(|v| v.powf(1.5) * lv).collect();
            let bump = oracle::density_scan(root, &mr, |k| 0.5f64.powf(k as f64 * beta), 1.0 / (1.5 * p));
            assert_rel(a0_constant(&mu, &ex, A0Form::BumpB, None).unwrap().value, bump, "A0 bump-b");
        }
        let w = if r.gen_bool(0.8) { positive_field(&mut r, root) } else { field(&mut r, root) };
        let pa = 1.2 + 4.0 * r.gen::<f64>();
        let got = ap_characteristic(&w, ApExponent::Finite(pa)).unwrap().value;
        let want = oracle::ap(&w, pa);
        assert!(got == want || rel_close(got, want, 1e-12), "A_p: {got} vs {want}");
    });
}

#[test]
fn operators_match_oracle() {
    for_all(|seed, root| {
        let mut r = rng(3000 + seed);
        let f = field(&mut r, root);
        let g = field(&mut r, root);
        let n = root.dim() as f64;
        let alpha = n * 0.95 * r.gen::<f64>();
        let fagg = TreeAggregate::of_field(&f);
        let gagg = TreeAggregate::of_field(&g);
        let lv = root.leaf_volume();
        let masses: Vec<f64> = f.values().iter().map(|v| v * lv).collect();
        assert_fields(
            fractional_maximal(&fagg, alpha, None).unwrap().values(),
            &oracle::fractional_maximal(root, &masses, alpha),
            "M_α",
        );
        let pair = [f.clone(), g.clone()];
        let aggs = [fagg.clone(), gagg.clone()];
        let alpha2 = 2.0 * n * 0.95 * r.gen::<f64>();
        assert_fields(
            multilinear_maximal(&aggs, alpha2).unwrap().values(),
            &oracle::multilinear_maximal(&pair, alpha2),
            "bilinear maximal",
        );
        let mn = 2.0 * n;
        let canonical = oracle::dyadic_sum(&pair, |k| 0.5f64.powf(k as f64 * (alpha2 - mn)));
        assert_fields(
            dyadic_integral_operator(&aggs, &KernelWeight::canonical(alpha2, 2)).unwrap().values(),
            &canonical,
            "dyadic integral",
        );
        let table: Vec<f64> = (0..=root.depth()).map(|_| r.gen::<f64>()).collect();
        let explicit = oracle::dyadic_sum(&pair, |k| table[k as usize]);
        assert_fields(
            dyadic_integral_operator(&aggs, &KernelWeight::explicit(table.clone()).unwrap()).unwrap().values(),
            &explicit,
            "explicit kernel",
        );
        assert_fields(
            discretization_majorant(&aggs, alpha2).unwrap().values(),
            &oracle::discretization_majorant(&pair, alpha2),
            "discretization majorant",
        );
        let mu = measure(&mut r, root);
        assert_fields(mu_maximal(&g, &mu).unwrap().values(), &oracle::mu_maximal(&g, &mu), "M_μ");
    });
}
