//! Acceptance suite: one test per criterion, printing one PASS/FAIL line
//! each. Criteria 1, 2 and 7 pin externally quoted targets that direct
//! integration of this model does not attain (the measured values are in
//! each line); they are asserted as stated, so they fail until the quoted
//! numbers are revised. The remaining criteria must pass.

use adialab::lab::acceptance::{criterion, CriterionOutcome};

fn check(id: usize) {
    let outcome: CriterionOutcome = criterion(id);
    println!("{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn criterion_1_quoted_time_targets() {
    check(1);
}

#[test]
fn criterion_2_order_separation_ratio() {
    check(2);
}

#[test]
fn criterion_3_reduction_equivalence() {
    check(3);
}

#[test]
fn criterion_4_spectrum_embedding() {
    check(4);
}

#[test]
fn criterion_5_first_order_overlay() {
    check(5);
}

#[test]
fn criterion_6_center_oracle_equivalence() {
    check(6);
}

#[test]
fn criterion_7_final_deviation_hierarchy() {
    check(7);
}

#[test]
fn criterion_8_oscillation_pattern_classes() {
    check(8);
}

#[test]
fn criterion_9_numerics_hygiene() {
    check(9);
}
