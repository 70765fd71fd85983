//! End-to-end tests of the binary: exit-code semantics, report schema,
//! and byte-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use rainbow_cli::report::validate_report;

fn rainbow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rainbow"))
        .args(args)
        .env_remove("RAINBOW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 output")
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("rainbow-test-{}-{name}", std::process::id()));
    path
}

fn write_pinned_system() -> PathBuf {
    let path = temp_path("pinned-423.json");
    let out = rainbow(&[
        "seq",
        "construct",
        "--construction",
        "pinned",
        "-n",
        "4",
        "-k",
        "2",
        "-s",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    path
}

#[test]
fn match_on_pinned_system_is_a_definitive_negative() {
    let path = write_pinned_system();
    let out = rainbow(&["match", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    validate_report(&report).unwrap();
    assert_eq!(report["result"]["found"], serde_json::Value::Bool(false));
}

#[test]
fn cross_dep_affirms_the_pinned_system() {
    let path = write_pinned_system();
    let out = rainbow(&["cross-dep", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["cross_dependent"], serde_json::Value::Bool(true));
}

#[test]
fn hall_on_pinned_system_reports_the_deficiency_set() {
    let path = write_pinned_system();
    let out = rainbow(&["hall", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    validate_report(&report).unwrap();
    assert_eq!(report["result"]["certificate"], "violating-set");
    assert_eq!(report["result"]["families"].as_array().unwrap().len(), 3);
    assert_eq!(report["result"]["neighborhood"].as_array().unwrap().len(), 2);
}

#[test]
fn hall_accepts_an_explicit_matching_document() {
    let path = write_pinned_system();
    let matching = temp_path("matching-42.json");
    std::fs::write(
        &matching,
        r#"{"n": 4, "k": 2, "rows": [[1,2],[2,1],[3,4],[4,3]]}"#,
    )
    .unwrap();
    let out = rainbow(&[
        "hall",
        "--input",
        path.to_str().unwrap(),
        "--matching",
        matching.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["certificate"], "violating-set");
}

#[test]
fn certify_uniform_vector_exits_zero() {
    let out = rainbow(&["cn", "certify", "-p", "7", "-f", "2,2,2"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    validate_report(&report).unwrap();
    assert_eq!(report["result"]["coefficient"], "1");
    assert_eq!(report["result"]["satisfying_sequence"][0], "14");
}

#[test]
fn invalid_certificate_exits_one() {
    // s! = 6 vanishes mod 3
    let out = rainbow(&["cn", "certify", "-p", "3", "-f", "2,2,2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn witness_search_verifies_uniform_sequence() {
    let out = rainbow(&[
        "seq", "witness", "-n", "2", "-k", "2", "-s", "2", "--thresholds", "2,2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["status"], "SATISFYING-VERIFIED");
}

#[test]
fn witness_search_refutes_weak_sequence() {
    let out = rainbow(&[
        "seq", "witness", "-n", "2", "-k", "2", "-s", "2", "--thresholds", "0,2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["status"], "WITNESS-FOUND");
    // the embedded witness document parses back
    let doc = report["result"]["witness"].as_str().unwrap();
    rainbow_core::docio::deserialize_system(doc).unwrap();
}

#[test]
fn witness_budget_exhaustion_exits_three() {
    let out = rainbow(&[
        "seq", "witness", "-n", "2", "-k", "2", "-s", "2", "--thresholds", "2,2", "--budget", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seq_check_flags_the_refuted_sequence() {
    let path = temp_path("pigeonhole-222.json");
    let out = rainbow(&[
        "seq", "construct", "--construction", "pigeonhole",
        "-n", "2", "-k", "2", "-s", "2",
        "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = rainbow(&[
        "seq", "check", "--input", path.to_str().unwrap(), "--thresholds", "0,2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["counterexample"], serde_json::Value::Bool(true));
}

#[test]
fn seq_make_spread_values() {
    let out = rainbow(&[
        "seq", "make", "--kind", "spread", "-n", "1024", "-k", "2", "-s", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["values"][0], "2052");
}

#[test]
fn truncated_sequence_reports_log_base() {
    let out = rainbow(&[
        "seq", "make", "--kind", "truncated", "-n", "10", "-k", "2", "-s", "3", "--c", "1",
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["log_base"], "natural");
    assert_eq!(report["result"]["values"][0], "20");
}

#[test]
fn greedy_rejects_small_instances_as_usage_error() {
    let path = write_pinned_system();
    let out = rainbow(&["greedy", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = rainbow(&["match", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sampling_reports_are_byte_identical_for_a_seed() {
    let path = write_pinned_system();
    let args = [
        "rand", "xi", "--input", path.to_str().unwrap(), "--trials", "50", "--seed", "7",
    ];
    let a = rainbow(&args);
    let b = rainbow(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let report: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    validate_report(&report).unwrap();
    assert_eq!(report["config"]["seed"], "7");
}

#[test]
fn env_seed_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_rainbow"))
        .args(["rand", "sample", "-n", "4", "-k", "2"])
        .env("RAINBOW_SEED", "99")
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["config"]["seed"], "99");
}

#[test]
fn catalog_csv_has_the_fixed_columns() {
    let out = rainbow(&["cn", "catalog", "-s", "2", "-p", "5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let body = stdout(&out);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("f,coefficient,valid,sequence"));
    assert_eq!(lines.next(), Some("0 2,1,true,0 10"));
    assert_eq!(lines.next(), Some("1 1,3,true,5 5"));
}

#[test]
fn csv_is_rejected_for_plain_commands() {
    let path = write_pinned_system();
    let out = rainbow(&["match", "--input", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classifier_csv_emits_count_table() {
    let path = write_pinned_system();
    let out = rainbow(&[
        "rand", "classify", "--input", path.to_str().unwrap(), "--family", "2",
        "--p", "0.05", "--format", "csv",
    ]);
    let body = stdout(&out);
    assert!(body.starts_with("coord,value,count,case,role"));
    // one row per (coordinate, value) pair
    assert_eq!(body.lines().count(), 1 + 2 * 4);
}

#[test]
fn spread_commands_round_trip() {
    let path = write_pinned_system();
    let out = rainbow(&[
        "spread", "check", "--input", path.to_str().unwrap(), "--family", "2", "-r", "4",
    ]);
    // the prefix family is too concentrated for r = 4: one first-part
    // value carries 4 of the 9 blocks, above 9/4
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["result"]["violator"].is_string());

    let out = rainbow(&[
        "spread", "pipeline", "--input", path.to_str().unwrap(), "-r", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    validate_report(&report).unwrap();
    assert_eq!(report["result"]["properties_ok"], serde_json::Value::Bool(true));
    // at r = 2 the prefix families are already 2-spread and attach to the
    // empty core, and a collection containing the empty core always admits
    // a cross-matching; cross-dependence of cores needs the large-r regime
    assert_eq!(
        report["result"]["cores_cross_dependent"],
        serde_json::Value::Bool(false)
    );
}

#[test]
fn reproduce_is_idempotent_for_a_seed() {
    let a = rainbow(&["reproduce", "--seed", "3"]);
    let b = rainbow(&["reproduce", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let report: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    validate_report(&report).unwrap();
    assert_eq!(report["result"]["criteria"].as_array().unwrap().len(), 11);
}

#[test]
fn mixing_command_on_projected_family() {
    // a family over [3]^2 document stands for P inside [3]^3
    let doc = r#"{"n": 3, "k": 2, "s": 1, "label": "corner", "families": [[[1,1]]]}"#;
    let path = temp_path("mixing.json");
    std::fs::write(&path, doc).unwrap();
    let out = rainbow(&["rand", "mixing", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["result"]["disjoint_pairs"], "4");
    assert_eq!(report["result"]["holds"], serde_json::Value::Bool(true));
}
