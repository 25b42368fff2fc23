use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qwalk::Instance;
use serde_json::Value;

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk")).args(args).env_remove("QWALK_SEED").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = qwalk(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn generated(dir: &Path, name: &str, spec: &[&str]) -> PathBuf {
    let p = dir.join(name);
    let mut args = vec!["gen"];
    args.extend_from_slice(spec);
    args.extend_from_slice(&["--out", path_str(&p)]);
    assert!(qwalk(&args).status.success());
    p
}

#[test]
fn single_vertex_tree() {
    let dir = tempfile::tempdir().unwrap();
    let p = generated(dir.path(), "one.json", &["--kind", "tree", "--vertices", "1", "--seed", "7"]);
    let inst = Instance::load(&p).unwrap();
    assert_eq!(inst.dag.vertex_count(), 1);
    assert_eq!(inst.dag.edge_count(), 0);
}

#[test]
fn generation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ["--kind", "dag", "--vertices", "30", "--depth", "5", "--seed", "11"];
    let a = generated(dir.path(), "a.json", &spec);
    let b = generated(dir.path(), "b.json", &spec);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let inst = Instance::load(&a).unwrap();
    assert_eq!(inst.dag.vertex_count(), 30);
    assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
}

#[test]
fn single_edge_estimates_are_all_correct() {
    let dir = tempfile::tempdir().unwrap();
    let p = generated(dir.path(), "edge.json", &["--kind", "path", "--vertices", "2"]);
    let r = json(&["estimate-size", "--input", path_str(&p), "--t0", "16", "--trials", "100"]);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["result"]["edges"], 1);
    assert_eq!(r["result"]["rate"], 1.0);
    assert_eq!(r["result"]["trials"].as_array().unwrap().len(), 100);
}

#[test]
fn small_bound_reports_exceeds() {
    let dir = tempfile::tempdir().unwrap();
    let p = generated(dir.path(), "t.json", &["--kind", "tree", "--vertices", "41", "--seed", "3"]);
    let r = json(&["estimate-size", "--input", path_str(&p), "--t0", "20", "--trials", "20"]);
    let exceeds = r["result"]["exceeds"].as_u64().unwrap();
    assert!(exceeds >= 18, "{exceeds}/20");
}

#[test]
fn reports_embed_reproducible_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let p = generated(dir.path(), "t.json", &["--kind", "tree", "--vertices", "30", "--seed", "4"]);
    let args = ["estimate-size", "--input", path_str(&p), "--t0", "64", "--trials", "6", "--seed", "9"];
    let first = qwalk(&args).stdout;
    let mut threaded = args.to_vec();
    threaded.extend(["--parallel", "3"]);
    assert_eq!(first, qwalk(&threaded).stdout);
    let r: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(r["seed"], 9);
    assert_eq!(r["params"]["t0"], 64);
    assert_eq!(r["input"]["sha256"].as_str().unwrap().len(), 64);
    assert!(r["version"].is_string());
}

#[test]
fn seed_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = generated(dir.path(), "edge.json", &["--kind", "path", "--vertices", "2"]);
    let out = Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(["estimate-size", "--input", path_str(&p), "--t0", "4"])
        .env("QWALK_SEED", "31")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["seed"], 31);
}

#[test]
fn marked_root_is_found_first() {
    let dir = tempfile::tempdir().unwrap();
    let p = generated(dir.path(), "m.json", &["--kind", "complete", "--depth", "3", "--mark", "1"]);
    let r = json(&["backtrack", "--input", path_str(&p)]);
    assert_eq!(r["result"]["found"], 1);
    assert_eq!(r["result"]["trials"][0]["stage_reached"], 1);
}

#[test]
fn unmarked_tree_is_reported_empty() {
    let dir = tempfile::tempdir().unwrap();
    let p =
        generated(dir.path(), "u.json", &["--kind", "tree", "--vertices", "50", "--depth", "8", "--branching", "2"]);
    let r = json(&["backtrack", "--input", path_str(&p), "--trials", "5", "--sizes", "exact"]);
    assert_eq!(r["result"]["marked_exists"], false);
    assert_eq!(r["result"]["found"], 0);
}

#[test]
fn early_mark_stops_the_doubling_early() {
    let dir = tempfile::tempdir().unwrap();
    let spec =
        ["--kind", "tree", "--vertices", "200", "--depth", "12", "--branching", "2", "--seed", "13", "--mark-dfs", "5"];
    let p = generated(dir.path(), "e.json", &spec);
    let r = json(&["backtrack", "--input", path_str(&p), "--no-cutover", "--seed", "2"]);
    let stages = r["result"]["trials"][0]["stages"].as_array().unwrap();
    assert!(stages.len() <= 4, "{} stages", stages.len());
    assert_eq!(r["result"]["found"], 1);
}

#[test]
fn single_true_leaf_evaluates_to_true() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "leaf.json", r#"{"vertices":1,"root":1,"edges":[],"leaf_values":{"1":1}}"#);
    let r = json(&["evaluate", "--input", path_str(&p)]);
    assert_eq!(r["result"]["trials"][0]["value"], true);
    assert_eq!(r["result"]["minimax"], true);
}

#[test]
fn four_leaf_formula_matches_minimax() {
    let dir = tempfile::tempdir().unwrap();
    // OR(AND(1, 0), AND(1, 1)) = 1
    let p = write(
        dir.path(),
        "four.json",
        r#"{"vertices":7,"root":1,"edges":[[1,2],[1,3],[2,4],[2,5],[3,6],[3,7]],
            "gates":{"1":"OR","2":"AND","3":"AND"},"leaf_values":{"4":1,"5":0,"6":1,"7":1}}"#,
    );
    let r = json(&["evaluate", "--input", path_str(&p), "--trials", "5"]);
    assert_eq!(r["result"]["minimax"], true);
    assert_eq!(r["result"]["rate"], 1.0);
}

#[test]
fn random_formulas_mostly_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut agree = 0;
    for s in 0..10 {
        let seed = s.to_string();
        let p = generated(dir.path(), "f.json", &["--kind", "formula", "--leaves", "30", "--seed", &seed]);
        let r = json(&["evaluate", "--input", path_str(&p), "--seed", &seed]);
        agree += r["result"]["agreement"].as_u64().unwrap();
    }
    assert!(agree >= 9, "{agree}/10");
}

#[test]
fn tree_formula_is_exact_on_paths() {
    let r = json(&["verify", "--suite", "tree-formula", "--family", "paths", "--count", "30"]);
    assert_eq!(r["result"]["pass"], true);
    assert!(r["result"]["reports"][0]["max_violation"].as_f64().unwrap() < 1e-9);
}

#[test]
fn spectral_suites_pass_on_small_families() {
    for family in ["trees", "dags"] {
        let r = json(&["verify", "--suite", "all", "--family", family, "--count", "15"]);
        assert_eq!(r["result"]["pass"], true, "{family}");
        assert_eq!(r["result"]["reports"].as_array().unwrap().len(), if family == "trees" { 9 } else { 8 });
    }
    let r = json(&["verify", "--suite", "dag-bound", "--family", "tree-chord", "--count", "30"]);
    assert_eq!(r["result"]["pass"], true);
}

#[test]
fn bench_slopes() {
    let want = [("t0", 0.5, 0.1), ("delta", -1.5, 0.15), ("n", 0.5, 0.15)];
    for (axis, slope, tol) in want {
        let r = json(&["bench", "--axis", axis]);
        let got = r["result"]["slope"].as_f64().unwrap();
        assert!((got - slope).abs() <= tol, "{axis}: {got}");
        assert!(r["result"]["points"].as_array().unwrap().len() >= 5);
    }
}

#[test]
fn bench_writes_csv() {
    let out = qwalk(&["bench", "--axis", "n", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,controlled_u"));
    assert!(lines.all(|l| l.split(',').count() == 2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(qwalk(&["estimate-size", "--input", path_str(&missing)]).status.code(), Some(4));
    let bad = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(qwalk(&["estimate-size", "--input", path_str(&bad)]).status.code(), Some(4));
    let edge = generated(dir.path(), "edge.json", &["--kind", "path", "--vertices", "2"]);
    assert_eq!(qwalk(&["estimate-size", "--input", path_str(&edge), "--delta", "2"]).status.code(), Some(2));
    assert_eq!(qwalk(&["gen", "--kind", "tree", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(qwalk(&["verify", "--suite", "tree-formula", "--family", "dags"]).status.code(), Some(2));
    let cyclic = write(dir.path(), "cyc.json", r#"{"vertices":2,"root":1,"edges":[[1,2],[2,1]]}"#);
    assert_eq!(qwalk(&["backtrack", "--input", path_str(&cyclic)]).status.code(), Some(2));
}
