//! Acceptance suite: one test per battery criterion, each printing a
//! pass/fail line (visible with `--nocapture`).

use rainbow_cli::battery::{run_criterion, Corruption};

fn check(id: usize) {
    let outcome = run_criterion(id, Corruption::None);
    println!(
        "criterion {:2} [{}]: {} — {}",
        outcome.id,
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.name,
        outcome.detail
    );
    assert!(outcome.passed, "criterion {} failed: {}", outcome.id, outcome.detail);
}

#[test]
fn criterion_01_pinned_construction() {
    check(1);
}

#[test]
fn criterion_02_pigeonhole_construction() {
    check(2);
}

#[test]
fn criterion_03_coefficient_kernel() {
    check(3);
}

#[test]
fn criterion_04_certificate_soundness() {
    check(4);
}

#[test]
fn criterion_05_concentration() {
    check(5);
}

#[test]
fn criterion_06_anticoncentration_classifier() {
    check(6);
}

#[test]
fn criterion_07_mixing_inequality() {
    check(7);
}

#[test]
fn criterion_08_spread_engine() {
    check(8);
}

#[test]
fn criterion_09_witness_frontier() {
    check(9);
}

#[test]
fn criterion_10_greedy_matcher() {
    check(10);
}

#[test]
fn criterion_11_field_layer() {
    check(11);
}

#[test]
fn corrupted_construction_fails_its_row() {
    let outcome = run_criterion(1, Corruption::PinnedConstruction);
    assert!(!outcome.passed);
    assert!(outcome.detail.contains("sizes"));
}
