use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &PathBuf, file: &str, v: &Value) -> String {
    let p = dir.join(file);
    fs::write(&p, v.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

fn fborel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fborel"))
        .args(args)
        .env_remove("FBOREL_WIDTH")
        .env_remove("FBOREL_DEPTH")
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

/// T_{w+1}: a root over infinitely many copies of T_w.
fn t_omega_plus_one() -> Value {
    json!({
        "kind": "join_omega",
        "family": {
            "family": "constant",
            "sub": {
                "kind": "join_omega",
                "family": {"family": "canonical_seq", "lambda": "w", "enumeration": "canonical"}
            }
        }
    })
}

#[test]
fn rank_of_canonical_tree() {
    let d = scratch("rank");
    let t = write(&d, "t.json", &t_omega_plus_one());
    for kind in ["l", "i"] {
        let o = fborel(&["rank", "--kind", kind, "--tree", &t]);
        assert_eq!(stdout_json(&o), json!({"rank": "w^1*1 + 1"}));
    }
}

#[test]
fn classify_fork_over_trivial() {
    let d = scratch("classify");
    let b = json!({"kind":"fork","family":{"family":"uniform_tail","prefix":[],"base":0,"word":[],"sub":{"kind":"trivial"}}});
    let f = write(&d, "b.json", &b);
    let o = fborel(&["broom", "classify", "--in", &f]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), r#"{"rank":"2"}"#);
}

#[test]
fn ord_show() {
    let v = stdout_json(&fborel(&["ord", "show", "w*2+1"]));
    assert_eq!(v["successor"], json!(true));
    assert_eq!(v["alpha_prime"], json!("w^1*2"));
}

#[test]
fn bad_input_exits_2() {
    let d = scratch("bad");
    let p = d.join("t.json");
    fs::write(&p, "{not json").unwrap();
    let o = fborel(&["rank", "--kind", "l", "--tree", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fborel(&["ord", "show", "w+"]).status.code(), Some(2));
    assert_eq!(fborel(&["verify", "--suite", "nope"]).status.code(), Some(2));
    // JSON-only command asked for DOT
    assert_eq!(fborel(&["--format", "dot", "ord", "show", "3"]).status.code(), Some(2));
}

#[test]
fn zoom_at_non_isolated_point_exits_3() {
    let d = scratch("zoom3");
    let z = write(&d, "z.json", &json!({"y": {"points": 2, "opens": [[0]]}, "xs": {"1": {"points": 2, "opens": []}}}));
    let o = fborel(&["topo", "zoom", "--in", &z]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn failed_axioms_exit_4_with_counterexample() {
    let d = scratch("axioms");
    let f = write(
        &d,
        "a.json",
        &json!({"space": {"points": 3, "opens": [[0], [1], [2]]}, "family": [[0], [1]], "escape_bound": 0}),
    );
    let out = d.to_str().unwrap();
    let o = fborel(&["--seed", "11", "--out-dir", out, "topo", "check-a-axioms", "--in", &f]);
    assert_eq!(o.status.code(), Some(4));
    let ce: Value = serde_json::from_str(&fs::read_to_string(d.join("counterexample-11.json")).unwrap()).unwrap();
    assert_eq!(ce["a4"], json!(false));
    assert_eq!(ce["a1"], json!(true));

    // without the escape bound the same family is fine
    let f = write(&d, "b.json", &json!({"space": {"points": 3, "opens": [[0], [1], [2]]}, "family": [[0], [1]]}));
    let v = stdout_json(&fborel(&["topo", "check-a-axioms", "--in", &f]));
    assert_eq!(v["a4"], json!(true));
}

#[test]
fn zoom_and_dot() {
    let d = scratch("zoom");
    let z = write(&d, "z.json", &json!({"y": {"points": 2, "opens": [[0]]}, "xs": {"0": {"points": 2, "opens": [[0], [1]]}}}));
    let v = stdout_json(&fborel(&["topo", "zoom", "--in", &z]));
    assert_eq!(v["quotient"], json!([0, 0, 1]));
    let o = fborel(&["--format", "dot", "topo", "zoom", "--in", &z]);
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("digraph space {"));
    assert!(dot.contains("2 -> 0;") && dot.contains("2 -> 1;"));
}

#[test]
fn w_operator() {
    let d = scratch("w");
    // Sierpinski space, P = everything, G = {0}
    let f = write(&d, "w.json", &json!({"space": {"points": 2, "opens": [[0]]}, "p": [0, 1], "g": [0]}));
    assert_eq!(stdout_json(&fborel(&["topo", "w-op", "--in", &f])), json!({"w": [0]}));
}

#[test]
fn canonical_tree_dot_respects_truncation() {
    let o = fborel(&["--format", "dot", "--depth", "2", "--width", "1", "tree", "canonical", "w"]);
    assert!(o.status.success());
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.contains("digraph"));
    let small = Command::new(env!("CARGO_BIN_EXE_fborel"))
        .args(["--format", "dot", "tree", "canonical", "w"])
        .env("FBOREL_WIDTH", "1")
        .env("FBOREL_DEPTH", "2")
        .output()
        .unwrap();
    assert_eq!(small.stdout, dot.into_bytes());
}

#[test]
fn verify_is_deterministic() {
    let a = fborel(&["--seed", "3", "verify", "--suite", "reindex", "--cases", "30"]);
    let b = fborel(&["--seed", "3", "verify", "--suite", "reindex", "--cases", "30"]);
    let v = stdout_json(&a);
    assert_eq!(v["pass"], json!(true));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compile_then_evaluate() {
    let d = scratch("compile");
    let e = write(
        &d,
        "e.json",
        &json!({"universe": {"size": 4}, "expr": {"op": "union", "of": [{"op": "base", "set": [0]}, {"op": "base", "set": [2]}]}}),
    );
    let h = stdout_json(&fborel(&["scheme", "compile", "--expr", &e, "--alpha", "1"]));
    let hf = write(&d, "h.json", &h);
    assert_eq!(stdout_json(&fborel(&["scheme", "eval", "--in", &hf])), json!({"value": [0, 2]}));
}
