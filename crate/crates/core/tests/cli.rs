use std::path::Path;
use std::process::{Command, Output};

fn citcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citcp")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = citcp(args);
    assert!(out.status.success(), "citcp {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, config: &str, seed: u64) -> String {
    let cfg = dir.join("synth.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("data{seed}"));
    ok(&["synth", "--config", s(&cfg), "--seed", &seed.to_string(), "--out", s(&out)]);
    s(&out).to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{"builds": 20, "tests": 15, "files": 30, "base_failure_rate": 0.05}"#;
const FAST: &str = r#"{"hyperparams": {"bags": 5, "trees_per_bag": 3, "max_leaves": 20}}"#;

#[test]
fn extract_train_prioritize() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), SMALL, 1);
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, FAST).unwrap();

    let csv = ok(&["extract", &data, "--build", "20"]);
    let text = std::fs::read_to_string(csv.trim()).unwrap();
    assert!(text.starts_with("build_id,test_path,F_Age,"));
    assert_eq!(text.lines().count(), 16);

    let model = tmp.path().join("model.json");
    ok(&["train", &data, "--until", "20", "--out", s(&model), "--run-config", s(&cfg)]);
    let order = ok(&["prioritize", &data, "--build", "20", "--model", s(&model)]);
    let mut tests: Vec<&str> = order.lines().collect();
    assert_eq!(tests.len(), 15);
    tests.sort();
    tests.dedup();
    assert_eq!(tests.len(), 15);

    let single = synth(tmp.path(), r#"{"builds": 3, "tests": 1, "files": 5, "coverage_per_test": 1}"#, 2);
    let order = ok(&["prioritize", &single, "--build", "3", "--model", s(&model)]);
    assert_eq!(order.lines().collect::<Vec<_>>(), vec!["src/test/java/t/T0Test.java"]);
}

#[test]
fn evaluate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), SMALL, 3);
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, FAST).unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let summary = ok(&["evaluate", &data, "--run-config", s(&cfg), "--out", s(&out)]);
        assert_eq!(summary.lines().count(), 4);
        std::fs::read_to_string(out.join("apfdc.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert!(a.lines().count() > 1);
    assert_eq!(a, b);
    let timing = std::fs::read_to_string(tmp.path().join("a/timing.csv")).unwrap();
    assert_eq!(timing.lines().next(), Some("group,P,M,T"));
    assert_eq!(timing.lines().count(), 10);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["hyperparams"]["bags"], 5);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = citcp(&["evaluate", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let data = synth(tmp.path(), SMALL, 4);
    assert_eq!(citcp(&["train", &data, "--until", "1", "--out", s(&tmp.path().join("m.json"))]).status.code(), Some(3));
    assert_ne!(citcp(&["extract", &data, "--build", "999"]).status.code(), Some(0));
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"sed": 1}"#).unwrap();
    assert_eq!(citcp(&["extract", &data, "--build", "1", "--run-config", s(&bad)]).status.code(), Some(2));
    assert_eq!(citcp(&["bogus"]).status.code(), Some(2));
}
