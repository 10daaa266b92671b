//! End-to-end acceptance suite: every criterion runs at its pinned tolerance
//! and prints one pass/fail line. `cargo test --test acceptance -- --nocapture`
//! shows the per-criterion details; `nlse-lab verify` runs the same checks.

use nlse_lab::acceptance;

fn assert_criterion(report: acceptance::CriterionReport) {
    println!(
        "criterion {} ({}): {}",
        report.id,
        report.name,
        if report.passed { "PASS" } else { "FAIL" }
    );
    for d in &report.details {
        println!("    {d}");
    }
    assert!(report.passed, "criterion {} failed: {:?}", report.id, report.details);
}

#[test]
fn criterion_1_linear_correctness() {
    assert_criterion(acceptance::criterion_1_linear_correctness());
}

#[test]
fn criterion_2_gauge_map_properties() {
    assert_criterion(acceptance::criterion_2_gauge_map_properties());
}

#[test]
fn criterion_3_linearizability() {
    assert_criterion(acceptance::criterion_3_linearizability());
}

#[test]
fn criterion_4_perturbation_sensitivity() {
    assert_criterion(acceptance::criterion_4_perturbation_sensitivity());
}

#[test]
fn criterion_5_velocity_cone() {
    assert_criterion(acceptance::criterion_5_velocity_cone());
}

#[test]
fn criterion_6_mixture_dichotomy() {
    assert_criterion(acceptance::criterion_6_mixture_dichotomy());
}

#[test]
fn criterion_7_signaling_dichotomy() {
    assert_criterion(acceptance::criterion_7_signaling_dichotomy());
}

#[test]
fn criterion_8_generalized_projections() {
    assert_criterion(acceptance::criterion_8_generalized_projections());
}

#[test]
fn criterion_9_functional_correctness() {
    assert_criterion(acceptance::criterion_9_functional_correctness());
}
