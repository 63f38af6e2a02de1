use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qbo::OperatorSpec;
use serde_json::Value;

fn qbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbo")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let fu = write(dir.path(), "fu.json", r#"{"kind":"family-uniform","m":4}"#);
    let out = qbo(&["check", s(&fu), "--budget", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_stdout(&out)["verdict"], "certified");

    let bad = write(dir.path(), "bad.json", r#"{"kind":"tensor","m":2,"p":[[[1,0],[1,0]],[[1,0],[0,1]]]}"#);
    let out = qbo(&["check", s(&bad), "--budget", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    let report = json_stdout(&out);
    assert_eq!(report["verdict"], "counterexample");
    assert_eq!(report["falsify"]["violating_prefix"], 1);

    let truncated = write(dir.path(), "trunc.json", r#"{"kind":"tensor","m":2,"p":[[["#);
    let out = qbo(&["check", s(&truncated)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1 column"));

    let out = qbo(&["check", s(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn iterate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let fu = write(dir.path(), "fu.json", r#"{"kind":"family-uniform","m":3}"#);
    let out = qbo(&["iterate", s(&fu), "--start", "1,0,0"]);
    assert!(out.status.success());
    let v = json_stdout(&out);
    assert_eq!(v["verdict"], "converged");
    for c in v["limit"].as_array().unwrap() {
        assert!((c.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    }

    let out = qbo(&["iterate", s(&fu), "--start", "1/3,1/3,1/3"]);
    assert_eq!(json_stdout(&out)["steps"], 0);

    let swap = write(dir.path(), "swap.json", r#"{"kind":"permutation","perm":[2,1,3]}"#);
    let csv = dir.path().join("traj.csv");
    let out = qbo(&["iterate", s(&swap), "--start", "0.5,0.3,0.2", "--out", s(&csv)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&csv).unwrap(), "step,x_1,x_2,x_3\n0,0.5,0.3,0.2\n1,0.3,0.5,0.2\n2,0.5,0.3,0.2\n");
    let verdict: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("traj.json")).unwrap()).unwrap();
    assert_eq!(verdict["verdict"], "cycle");
    assert_eq!(verdict["period"], 2);

    let out = qbo(&["iterate", s(&swap), "--start", "vertices", "--format", "json"]);
    assert_eq!(json_stdout(&out).as_array().unwrap().len(), 3);

    let many = dir.path().join("many.csv");
    let out = qbo(&["iterate", s(&fu), "--start", "random:2", "--seed", "4", "--out", s(&many)]);
    assert!(out.status.success());
    for name in ["many-0.csv", "many-0.json", "many-1.csv", "many-1.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }

    let out = qbo(&["iterate", s(&swap), "--start", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn classify_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"kind":"family-uniform","m":6}"#, "strictly-regular-evidence"),
        (r#"{"kind":"permutation","perm":[2,1,3]}"#, "periodic-orbit-found"),
    ];
    for (i, (op, expected)) in cases.iter().enumerate() {
        let f = write(dir.path(), &format!("op{i}.json"), op);
        let out = qbo(&["classify", s(&f), "--trials", "16"]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json_stdout(&out)["verdict"], *expected);
    }
    let id = serde_json::to_string(&OperatorSpec::Tensor(qbo::QsoTensor::identity(3).unwrap())).unwrap();
    let f = write(dir.path(), "id.json", &id);
    let out = qbo(&["classify", s(&f), "--trials", "16"]);
    assert_eq!(json_stdout(&out)["verdict"], "regular-evidence");

    let out = qbo(&["classify", s(&dir.path().join("nope.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mix_command() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", r#"{"kind":"family-uniform","m":3}"#);
    let b = write(dir.path(), "b.json", r#"{"kind":"permutation","perm":[2,1,3]}"#);
    let c = write(dir.path(), "c.json", r#"{"kind":"permutation","perm":[1,3,2]}"#);

    let out = qbo(&["mix", s(&a), s(&b), "--weights", "0.5,0.5"]);
    assert!(out.status.success());
    let v = json_stdout(&out);
    assert_eq!(v["kind"], "mix");
    assert_eq!(v["terms"].as_array().unwrap().len(), 2);

    let out = qbo(&["mix", s(&a), s(&b), s(&c), "--weights", "0.3,0.3,0.4"]);
    assert_eq!(json_stdout(&out)["terms"].as_array().unwrap().len(), 3);

    assert_eq!(qbo(&["mix", s(&a), s(&b), "--weights", "0.5,0.6"]).status.code(), Some(1));
    let out = qbo(&["mix", s(&a), s(&b), "--weights", "0,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly positive"));
}

#[test]
fn generate_command() {
    let dir = tempfile::tempdir().unwrap();
    let perms = dir.path().join("perms");
    assert!(qbo(&["generate", "permutations", "--m", "3", "--out", s(&perms)]).status.success());
    let files: Vec<_> = fs::read_dir(&perms).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 6);
    for f in &files {
        let text = fs::read_to_string(f).unwrap();
        let op: OperatorSpec = serde_json::from_str(&text).unwrap();
        let again: OperatorSpec = serde_json::from_str(&serde_json::to_string(&op).unwrap()).unwrap();
        assert_eq!(op, again);
    }

    let pair = dir.path().join("pair");
    assert!(qbo(&["generate", "counterexample-pair", "--out", s(&pair)]).status.success());
    let p1: Value = serde_json::from_str(&fs::read_to_string(pair.join("p1.json")).unwrap()).unwrap();
    let p2: Value = serde_json::from_str(&fs::read_to_string(pair.join("p2.json")).unwrap()).unwrap();
    assert_eq!(p1["a"], serde_json::json!([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]));
    assert_eq!(p2["a"], serde_json::json!([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]));

    let out = qbo(&["generate", "family-va", "--matrix", "[[0.5,0.5],[0.6,0.4]]"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qbo(&["generate", "family-va", "--matrix", "[[0.25,0.75],[0.75,0.25]]"]);
    assert_eq!(json_stdout(&out)["kind"], "family-va");

    let out = qbo(&["generate", "interior-mix", "--m", "3", "--seed", "5"]);
    assert!(out.status.success());
    let op: OperatorSpec = serde_json::from_slice(&out.stdout).unwrap();
    assert!(qbo::certify_bistochastic(&op).is_certified());

    assert_eq!(qbo(&["generate", "family-uniform"]).status.code(), Some(1));
}

#[test]
fn majorize_command() {
    let out = qbo(&["majorize", "1/3,1/3,1/3", "0.5,0.3,0.2"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("verdict: majorized-by"));
    assert!(text.lines().any(|l| l.starts_with("2\t")));

    let out = qbo(&["majorize", "0.6,0.2,0.2", "0.5,0.5,0", "--format", "json"]);
    let v = json_stdout(&out);
    assert_eq!(v["verdict"], "incomparable");
    assert_eq!(v["x_majorized_by_y"]["violating_prefix"], 1);
    assert_eq!(v["y_majorized_by_x"]["violating_prefix"], 2);

    let out = qbo(&["majorize", "0.2,0.8", "0.2,0.8", "--format", "json"]);
    assert_eq!(json_stdout(&out)["verdict"], "equivalent");

    assert_eq!(qbo(&["majorize", "0.5,0.6", "0.5,0.5"]).status.code(), Some(1));
    assert_eq!(qbo(&["majorize", "0.5,0.5", "1,0,0"]).status.code(), Some(1));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "va.json", r#"{"kind":"family-va","a":[[0.2,0.8],[0.8,0.2]]}"#);
    let a = qbo(&["check", s(&f), "--budget", "5000", "--seed", "3"]);
    let b = qbo(&["check", s(&f), "--budget", "5000", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}
