use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn qsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsat")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn compile_to(dir: &tempfile::TempDir, target: &str) -> PathBuf {
    let out = qsat(&["compile", "--circuit", fixture("x_circuit.json").to_str().unwrap(), "--target", target]);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join(format!("{target}.json"));
    std::fs::write(&path, &out.stdout).unwrap();
    path
}

#[test]
fn compiled_yes_instance_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    for target in ["SLCT", "LCT"] {
        let inst = compile_to(&dir, target);
        let out = qsat(&["decide", "--instance", inst.to_str().unwrap(), "--reps", "4"]);
        assert_eq!(out.status.code(), Some(0), "{target}");
        let v = json(&out);
        assert_eq!(v["accept"], true);
        assert!(!v["trace"].as_array().unwrap().is_empty());
    }
}

#[test]
fn role_conflict_is_rejected() {
    let out = qsat(&["decide", "--instance", fixture("role_conflict.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["trace"][0]["rule"], "single-type-qudits");
}

#[test]
fn empty_instance_null_space_is_everything() {
    let out = qsat(&["oracle", "--instance", fixture("empty.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["nullspace_dim"], 36);
}

#[test]
fn output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = compile_to(&dir, "SLCT");
    let run = || qsat(&["decide", "--instance", inst.to_str().unwrap(), "--seed", "7", "--reps", "3"]).stdout;
    assert_eq!(run(), run());
}

#[test]
fn combine_then_decide_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (fixture("init.json"), fixture("role_conflict.json"));
    for (op, accept, dim) in [("sum", true, 24), ("product", false, 0)] {
        let out = qsat(&["combine", "--op", op, "--left", a.to_str().unwrap(), "--right", b.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let path = dir.path().join(format!("{op}.json"));
        std::fs::write(&path, &out.stdout).unwrap();
        let d = qsat(&["decide", "--instance", path.to_str().unwrap()]);
        assert_eq!(json(&d)["accept"], accept, "{op}");
        let o = qsat(&["oracle", "--instance", path.to_str().unwrap()]);
        assert_eq!(json(&o)["nullspace_dim"], dim, "{op}");
    }
}

#[test]
fn qubitize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let init = fixture("init.json");
    let out = qsat(&["qubitize", "--instance", init.to_str().unwrap(), "--padding", "p2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["variant"], "Qubit");
    let path = dir.path().join("q.json");
    std::fs::write(&path, &out.stdout).unwrap();
    // Blocks of 16 qubits; each block maps back to the qudit named by its first qubit.
    let back = json(&qsat(&["qubitize", "--inverse", "--instance", path.to_str().unwrap()]));
    assert_eq!(back["variant"], "SLCT");
    assert_eq!(back["clauses"].as_array().unwrap().len(), 1);
    assert_eq!(back["clauses"][0]["logical"], 0);
    assert_eq!(back["clauses"][0]["clock"], 16);
}

#[test]
fn export_dot_is_a_digraph() {
    let out = qsat(&["export-dot", "--instance", fixture("init.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(qsat(&["decide", "--instance", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(qsat(&["decide"]).status.code(), Some(2));
    let out = qsat(&["decide", "--instance", fixture("init.json").to_str().unwrap(), "--witness", "01x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qsat(&["compile", "--circuit", fixture("init.json").to_str().unwrap(), "--target", "SLCT"]);
    assert_eq!(out.status.code(), Some(2));
}
