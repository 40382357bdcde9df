use std::path::Path;
use std::process::{Command, Output};

use dtl_core::schema::LeafFile;
use dtl_core::{Ingested, LeafField, RootSpec};
use serde_json::Value;

fn dtl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtl"))
        .args(args)
        .current_dir(dir)
        .env_remove("DTL_WORK_CAP")
        .output()
        .expect("binary runs")
}

fn sweep_args(out: &str) -> Vec<&str> {
    vec!["sweep", "--ineq", "thm1.2b", "--dims", "1,2", "--depths", "2..3", "--trials", "6", "--seed", "11", "--out", out]
}

#[test]
fn sweep_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json", "a.csv", "b.csv"] {
        let out = dtl(&sweep_args(name), dir.path());
        assert!(out.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("a.dim1.csv"), read("b.dim1.csv"));
    assert_eq!(read("a.dim2.csv"), read("b.dim2.csv"));
}

#[test]
fn csv_has_header_and_one_row_per_depth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtl(
        &["sweep", "--ineq", "morrey-nesting", "--dims", "1", "--depths", "2..5", "--trials", "4", "--out", "r.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "depth,max_ratio,slope");
    assert_eq!(lines.len(), 5);
    for (line, depth) in lines[1..].iter().zip(2..) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], depth.to_string());
        assert!(cells[1].parse::<f64>().unwrap() <= 1.0 + 1e-12);
    }
}

#[test]
fn json_witnesses_ingest_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtl(&sweep_args("r.json"), dir.path());
    assert!(out.status.code().is_some_and(|c| c <= 1));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let mut seen = 0;
    for dim in report["dims"].as_array().unwrap() {
        for depth in dim["depths"].as_array().unwrap() {
            let w = &depth["witness"];
            let trial = w["trial"].as_u64().unwrap() as usize;
            let rec = &depth["trials"][trial];
            assert_eq!(rec["ratio"], depth["max_ratio"]);
            for f in w["fields"].as_array().unwrap().iter().chain([&w["g"]]) {
                let file: LeafFile = serde_json::from_value(f.clone()).unwrap();
                let Ingested::Field(field) = file.load().unwrap() else { panic!("fields load as fields") };
                // Emitted digits reproduce the values bit for bit.
                assert_eq!(LeafFile::from_field(&field), file);
                seen += 1;
            }
            let mu: LeafFile = serde_json::from_value(w["mu"].clone()).unwrap();
            assert!(matches!(mu.load().unwrap(), Ingested::Measure(_)));
        }
    }
    // m = 1 on the line and m = 2 in the plane, plus g, at two depths each.
    assert_eq!(seen, 2 * 2 + 2 * 3);
}

#[test]
fn unknown_id_and_bad_kind_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtl(&["sweep", "--ineq", "thm9.9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thm9.9"));
    let out = dtl(&["sweep", "--ineq", "morrey-nesting", "--fields", "gaussian"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn work_cap_refuses_large_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dtl"))
        .args(["sweep", "--ineq", "morrey-nesting", "--dims", "2", "--depths", "6"])
        .env("DTL_WORK_CAP", "1000")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exact_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    for (dim, depth) in [("1", "4"), ("2", "3")] {
        let out = dtl(
            &["verify", "--suite", "exact", "--dim", dim, "--depth", depth, "--trials", "10", "--seed", "2", "--out", "v.json"],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
        assert_eq!(v["pass"], Value::Bool(true));
    }
}

#[test]
fn constants_and_decompose_read_leaf_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), r#"{"dim":1,"depth":3,"kind":"atomic","atoms":[[0,1.0]]}"#).unwrap();
    let out = dtl(&["constants", "--measure", "m.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(rows.as_array().unwrap().iter().any(|r| r["name"] == "adams"));

    let root = RootSpec::new(1, 3).unwrap();
    let spike = LeafField::indicator(root, root.leaf(0)).unwrap();
    std::fs::write(dir.path().join("f.json"), serde_json::to_string(&LeafFile::from_field(&spike)).unwrap()).unwrap();
    let out = dtl(&["decompose", "corona", "--input", "f.json", "--out", "d.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    let members = d["members"].as_array().unwrap();
    assert_eq!(members.len(), 2);
    assert_eq!(members[1]["parent"]["level"], 0);
    assert_eq!(members[1]["cube"]["level"], 2);
    let out = dtl(&["decompose", "sparse", "--input", "f.json"], dir.path());
    assert!(out.status.success());
    let d: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(d["is_sparse"], Value::Bool(true));
}
