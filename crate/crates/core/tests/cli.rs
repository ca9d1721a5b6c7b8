use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn semilag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semilag")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(name: &str) -> String {
    data(name).display().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    let out = semilag(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("reformulate"));
    assert_eq!(semilag(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = semilag(&["solve", "--bogus"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_file_exits_3() {
    let out = semilag(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn malformed_and_invalid_instances_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"kind\": \"qp\", ").unwrap();
    assert_eq!(semilag(&["solve", broken.to_str().unwrap()]).status.code(), Some(3));

    let ragged = dir.path().join("ragged.json");
    std::fs::write(&ragged, r#"{"kind":"qp","n":2,"objective":{"a":[[1]],"b":[0,0],"c":0},"constraints":[]}"#).unwrap();
    assert_eq!(semilag(&["gap", ragged.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn bad_option_value_exits_3() {
    assert_eq!(semilag(&["gap", &path("e1.json"), "--tol-gap", "-1"]).status.code(), Some(3));
}

#[test]
fn infeasible_instance_exits_2() {
    let out = semilag(&["solve", &path("infeasible.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["result"]["value"], "+inf");
}

#[test]
fn kind_mismatch_exits_4() {
    assert_eq!(semilag(&["reformulate", &path("e1.json"), "--target", "pd"]).status.code(), Some(4));
    assert_eq!(semilag(&["reformulate", &path("knapsack.json"), "--target", "ap"]).status.code(), Some(4));
    assert_eq!(semilag(&["member", &path("knapsack.json"), "--point", "0,0"]).status.code(), Some(4));
}

#[test]
fn gap_on_e1_is_infinite() {
    let out = semilag(&["gap", &path("e1.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tool"], "semilag");
    assert_eq!(v["command"], "gap");
    assert_eq!(v["instance_kind"], "qp");
    let r = &v["result"];
    assert_eq!(r["primal_value"], -1.0);
    assert_eq!(r["dual_value"], "-inf");
    assert_eq!(r["gap"], "+inf");
    assert_eq!(r["classification"], "infinite_gap");
    assert_eq!(r["dual_termination"], "dual_unbounded_below_everywhere");
}

#[test]
fn gap_text_output() {
    let out = semilag(&["gap", &path("hqp_neg_identity.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("classification: zero_gap"), "{text}");
    assert!(text.contains("certificate hqp_strong_convexifiable: holds"), "{text}");
}

#[test]
fn certify_hqp() {
    let out = semilag(&["certify", &path("hqp_neg_identity.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let certs = json(&out)["result"].as_array().unwrap().clone();
    assert_eq!(certs.len(), 1);
    assert_eq!(certs[0]["kind"], "hqp_strong_convexifiable");
    assert_eq!(certs[0]["verdict"], "holds");
}

#[test]
fn certify_indefinite_hqp_fails() {
    let out = semilag(&["certify", &path("indefinite_pair.json"), "--format", "json"]);
    assert_eq!(json(&out)["result"][0]["verdict"], "fails");
}

#[test]
fn reformulated_instance_round_trips() {
    let out = semilag(&["reformulate", &path("knapsack.json"), "--target", "pd"]);
    assert_eq!(out.status.code(), Some(0));
    let inst = json(&out);
    assert_eq!(inst["kind"], "qp");
    // m = 1 equality and s = 2 binaries.
    assert_eq!(inst["constraints"].as_array().unwrap().len(), 8);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("pd.json");
    std::fs::write(&file, &out.stdout).unwrap();
    let solved = semilag(&["solve", file.to_str().unwrap(), "--format", "json"]);
    assert_eq!(solved.status.code(), Some(0));
    let v = json(&solved)["result"]["value"].as_f64().unwrap();
    assert!((v + 1.0).abs() <= 1e-6, "{v}");
}

#[test]
fn reformulate_json_carries_provenance() {
    let out = semilag(&["reformulate", &path("robust_toy.json"), "--target", "ap", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    // n = 2, q = 2 scenarios, so the lifted variable has 8 entries.
    assert_eq!(r["instance"]["n"], 8);
    let prov = r["provenance"].as_array().unwrap();
    assert_eq!(prov.len(), r["instance"]["constraints"].as_array().unwrap().len());
    assert_eq!(prov[0]["family"], "equality_upper");
}

#[test]
fn member_reports_witness() {
    let out = semilag(&["member", &path("e1.json"), "--point", "0,-1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert_eq!(r["verdict"], "member");
    assert!(r["witness"].is_array());
}

#[test]
fn output_is_deterministic() {
    let args = ["gap", &path("knapsack.json"), "--format", "json"];
    let a = semilag(&args);
    let b = semilag(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn corpus_passes() {
    let out = semilag(&["corpus"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
}
