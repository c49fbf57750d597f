use std::path::Path;
use std::process::{Command, Output};

use isodisplay::report::{Report, Verdict};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isodisplay")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad report: {e}\n{}", String::from_utf8_lossy(&out.stderr)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn graph_norm_isometry_group_of_path3() {
    let out = run(&["graph-norm", "isom", "--graph", "fixture:path3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.data["report"]["order"], "4");
}

#[test]
fn graph_norm_eval_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", r#"[1, 1, 0]"#);
    let out = run(&["graph-norm", "eval", "--graph", "fixture:path3", "--vector", &v]);
    assert_eq!(out.status.code(), Some(0));
    // adjacent vertices: 1 + 1/(1 + 2)
    assert_eq!(report(&out).data["norm"], "4/3");
}

#[test]
fn free_space_isometries_of_equilateral_triangle() {
    let out = run(&["free-space", "isom", "--metric", "fixture:equilateral3", "--transform", "concave"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out).data["order"], 12);
}

#[test]
fn free_space_norm_from_molecule_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"masses": {"a": 1, "c": -1}}"#);
    let metric = write(dir.path(), "d.json", r#"{"points": ["a", "b", "c"], "d": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]}"#);
    let out = run(&["free-space", "norm", "--metric", &metric, "--molecule", &m]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r.data["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let dual = run(&["free-space", "dual", "--metric", &metric, "--molecule", &m]);
    assert_eq!(dual.status.code(), Some(0));
}

#[test]
fn failing_verdict_sets_exit_status() {
    let out = run(&["graph-norm", "extremes", "--graph", "fixture:path3"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.checks.iter().filter(|c| c.verdict == Verdict::Fail).all(|c| c.witness.is_some()));
    let relaxed = run(&["graph-norm", "extremes", "--graph", "fixture:path3", "--fail-on-verdict", "none"]);
    assert_eq!(relaxed.status.code(), Some(0));
}

#[test]
fn linf_convex_transitivity_witness() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", "[1, 0]");
    let xs = write(dir.path(), "xs.json", "[0.5, 0.5]");
    let out = run(&["diag", "convex-transitive", "--space", "fixture:linf2", "--group", "fixture:signed-perms-2", "--x", &x, "--xstar", &xs]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r.data["kind"], "fails");
    assert!(r.checks[0].witness.is_some());
}

#[test]
fn usage_and_validation_errors() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["graph-norm", "isom"]).status.code(), Some(2));
    assert_eq!(run(&["selftest", "--criteria", "12"]).status.code(), Some(2));
    assert_eq!(run(&["graph-norm", "isom", "--graph", "/definitely/missing.json"]).status.code(), Some(3));
    assert_eq!(run(&["graph-norm", "isom", "--graph", "fixture:nope"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{not json");
    assert_eq!(run(&["graph-norm", "isom", "--graph", &bad]).status.code(), Some(3));
    let loop_graph = write(dir.path(), "loop.json", r#"{"n": 2, "edges": [[0, 0]]}"#);
    assert_eq!(run(&["graph-norm", "isom", "--graph", &loop_graph]).status.code(), Some(3));
    assert_eq!(run(&["display", "build", "--group", "fixture:pm-id-2", "--dim", "3"]).status.code(), Some(3));
}

#[test]
fn display_build_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("r.json").to_string_lossy().into_owned();
    let out = run(&["display", "build", "--group", "fixture:signed-swap-4", "--dim", "2", "--out", &saved]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let verify = run(&["display", "verify", "--result", &saved]);
    assert_eq!(verify.status.code(), Some(0));
    let r = report(&verify);
    assert_eq!(r.data["order"], 4);
    assert_eq!(r.data["equals_input"], true);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let args = ["display", "build", "--group", "fixture:pm-id-2", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    let again: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(again, r);
}

#[test]
fn gadget_and_selftest_subset() {
    let g = run(&["gadget", "--group", "fixture:s2-2", "--depths", "1,2"]);
    assert_eq!(g.status.code(), Some(0));
    let s = run(&["selftest", "--criteria", "1,4,10"]);
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(report(&s).checks.len(), 3);
}

#[test]
fn fixtures_print_as_inputs() {
    let out = run(&["fixtures", "equilateral3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out).data["points"].as_array().unwrap().len(), 3);
}
