use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const MODEL: &str = r#"
theta = [-2.0, 0.8, 0.3]

[[term]]
kind = "edges"

[[term]]
kind = "nodematch"
attr = "group"

[[term]]
kind = "gwesp"
decay = 0.25
"#;

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("model.toml"), MODEL).unwrap();
        let mut attrs = String::from("node,group\n");
        for i in 0..24 {
            attrs.push_str(&format!("{i},{}\n", if i % 2 == 0 { "a" } else { "b" }));
        }
        std::fs::write(dir.path().join("attrs.csv"), attrs).unwrap();
        let mut edges = String::from("source,target\n");
        for i in 0..24 {
            for d in [1, 2, 5] {
                edges.push_str(&format!("{i},{}\n", (i + d) % 24));
            }
        }
        std::fs::write(dir.path().join("edges.csv"), edges).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_ergm")).current_dir(self.dir.path()).args(args).output().unwrap()
    }
}

fn network_args() -> Vec<&'static str> {
    vec!["--graph", "edges.csv", "--attrs", "attrs.csv", "--model", "model.toml"]
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn fit_mple_writes_fit_table_and_manifest() {
    let f = Fixture::new();
    let mut args = vec!["fit-mple", "--out", "out", "--seed", "7"];
    args.extend(network_args());
    let out = f.run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = read_json(&f.path("out/fit.json"));
    assert_eq!(fit["seed"], 7);
    assert_eq!(fit["result"]["estimator"], "MPLE");
    assert_eq!(fit["result"]["theta"].as_array().unwrap().len(), 3);
    let table = std::fs::read_to_string(f.path("out/table.txt")).unwrap();
    assert!(table.starts_with("# manifest=manifest.json seed=7"));
    assert!(table.contains("Logistic Regression"));
    let manifest = read_json(&f.path("out/manifest.json"));
    assert_eq!(manifest["command"], "fit-mple");
    assert_eq!(manifest["outputs"], serde_json::json!(["fit.json", "table.txt"]));
}

#[test]
fn missing_attribute_is_an_input_error_naming_it() {
    let f = Fixture::new();
    std::fs::write(f.path("bad.toml"), MODEL.replace("group", "party")).unwrap();
    let out = f.run(&["fit-mple", "--out", "o", "--graph", "edges.csv", "--attrs", "attrs.csv", "--model", "bad.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "input");
    assert!(err["message"].as_str().unwrap().contains("party"));
}

#[test]
fn exit_codes_by_failure_class() {
    let f = Fixture::new();
    let out = f.run(&["fit-mple", "--out", "o", "--model", "model.toml", "--graph", "edges.csv", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = f.run(&["fit-mple", "--out", "o", "--model", "model.toml", "--graph", "missing.csv"]);
    assert_eq!(out.status.code(), Some(3));

    std::fs::write(f.path("broken.csv"), "source,target\n0,1\n2\n").unwrap();
    let out = f.run(&["fit-mple", "--out", "o", "--model", "model.toml", "--graph", "broken.csv"]);
    assert_eq!(out.status.code(), Some(3));

    std::fs::write(f.path("edges_only.toml"), "[[term]]\nkind = \"edges\"\n").unwrap();
    let out = f.run(&["fit-mple", "--out", "o", "--model", "edges_only.toml", "--nodes", "6"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "estimation");
}

#[test]
fn seed_from_environment_is_recorded() {
    let f = Fixture::new();
    let mut args = vec!["simulate", "--out", "sim", "--burn-in", "500", "--interval", "50", "--num-samples", "20"];
    args.extend(network_args());
    let out = Command::new(env!("CARGO_BIN_EXE_ergm"))
        .current_dir(f.dir.path())
        .args(&args)
        .env("ERGM_SEED", "42")
        .env("ERGM_CORES", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stats = std::fs::read_to_string(f.path("sim/stats.csv")).unwrap();
    assert!(stats.contains("# seed=42\n# cores=1\n"));
    let (m, d) = ergm_core::io::read_stat_matrix_file(&f.path("sim/stats.csv")).unwrap();
    assert_eq!(m.rows(), 20);
    assert_eq!(d.unwrap().len(), 20);
}

#[test]
fn same_seed_gives_identical_outputs() {
    let f = Fixture::new();
    for out in ["a", "b"] {
        let mut args = vec!["fit-mcmle", "--out", out, "--seed", "3", "--burn-in", "2000", "--interval", "100", "--sample-size", "200"];
        args.extend(network_args());
        assert!(f.run(&args).status.success());
    }
    let a = std::fs::read(f.path("a/fit.json")).unwrap();
    let b = std::fs::read(f.path("b/fit.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn diagnose_flags_an_explosive_model() {
    let f = Fixture::new();
    std::fs::write(f.path("edges.toml"), "theta = [5.0]\n[[term]]\nkind = \"edges\"\n").unwrap();
    let out = f.run(&[
        "diagnose", "--out", "d", "--nodes", "30", "--model", "edges.toml", "--burn-in", "5000", "--interval", "100",
        "--num-samples", "100", "--svg",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gof = read_json(&f.path("d/gof.json"));
    assert_eq!(gof["result"]["degenerate_full"], true);
    assert!(f.path("d/trace_edges.csv").exists());
    let svg = std::fs::read_to_string(f.path("d/gof.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<!-- seed=0 -->"));
}

#[test]
fn bootstrap_table_has_interval_columns() {
    let f = Fixture::new();
    let mut args = vec!["bootstrap", "--out", "bs", "--replicates", "30", "--burn-in", "3000", "--seed", "2"];
    args.extend(network_args());
    let out = f.run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(f.path("bs/table.txt")).unwrap();
    assert!(table.contains("Lower Bound") && table.contains("Upper Bound"));
    let summary = read_json(&f.path("bs/bootstrap.json"));
    assert_eq!(summary["result"]["replicates"], 30);
    assert_eq!(summary["result"]["fit"]["estimator"], "BootstrapMPLE");
}

#[test]
fn study_config_rejects_unknown_keys() {
    let f = Fixture::new();
    std::fs::write(f.path("study.toml"), "replicates = 2\nbogus = 1\n").unwrap();
    let out = f.run(&["experiment", "rmse", "--out", "e", "--config", "study.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("bogus"));
}
