//! Acceptance battery: runs every verification criterion at its pinned
//! tolerance and prints one pass/fail line per criterion.

use bonnet4::verify::{run_criterion, CRITERIA};

fn run(name: &str) {
    let outcome = run_criterion(name, 3).expect("criterion must execute");
    let status = if outcome.passed { "PASS" } else { "FAIL" };
    println!("{status} criterion `{}`", outcome.name);
    for line in &outcome.lines {
        println!("{line}");
    }
    assert!(outcome.passed, "criterion `{name}` failed:\n{}", outcome.lines.join("\n"));
}

#[test]
fn criterion_01_closed_form_invariants() {
    run("closed-form");
}

#[test]
fn criterion_02_semiaxis_identities() {
    run("axes");
}

#[test]
fn criterion_03_pairing_identity() {
    run("av");
}

#[test]
fn criterion_04_vertical_harmonicity() {
    run("vertical-harmonicity");
}

#[test]
fn criterion_05_laplace_identities() {
    run("ricci");
}

#[test]
fn criterion_06_euler_numbers_and_zero_counts() {
    run("euler");
}

#[test]
fn criterion_07_gauss_map_identities() {
    run("gauss-map");
}

#[test]
fn criterion_08_associated_family_round_trip() {
    run("associated-family");
}

#[test]
fn criterion_09_group_law() {
    run("group-law");
}

#[test]
fn criterion_10_distortion_pipeline() {
    run("distortion");
}

#[test]
fn criterion_11_ellipse_congruence() {
    run("ellipse-congruence");
}

#[test]
fn criterion_12_lagrangian_suite() {
    run("lagrangian");
}

#[test]
fn criterion_13_determinism() {
    run("determinism");
}

#[test]
fn criteria_table_is_complete() {
    assert_eq!(CRITERIA.len(), 13);
}
