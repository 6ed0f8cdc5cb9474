//! Difference-in-differences on simulated error rates, with the
//! counterfactual treated series.
//!
//! cargo run --example review_change_did

use review_audit::did::{did_estimate, did_with_error_rates, DidObservation, DidPanel, Group};
use review_audit::simulator::{inject_review_change, QuestionSpec, ReviewChangeDesign, SimulationConfig, Treatment};

fn main() -> review_audit::Result<()> {
    // a hand-built panel: the change adds 0.03 to the treated error rate
    let rows = [
        (Group::Control, 0, 0.10),
        (Group::Control, 1, 0.11),
        (Group::Control, 2, 0.12),
        (Group::Control, 3, 0.13),
        (Group::Treated, 0, 0.08),
        (Group::Treated, 1, 0.09),
        (Group::Treated, 2, 0.13),
        (Group::Treated, 3, 0.14),
    ];
    let observations = rows
        .iter()
        .map(|&(group, period, outcome)| DidObservation { group, period, outcome })
        .collect();
    let result = did_estimate(&DidPanel::new(observations, 2)?)?;
    println!("hand-built panel: effect {:+.4}", result.effect);
    for (actual, counterfactual) in result.treated_series.iter().skip(2).zip(&result.counterfactual) {
        println!(
            "  period {}: treated {:.4}, without the change {:.4}",
            actual.period, actual.value, counterfactual.value
        );
    }

    // simulated cohorts with a known +0.05 shift
    let mut config = SimulationConfig::new(
        2000,
        3,
        vec![QuestionSpec::new("q1", 2, 0.2), QuestionSpec::new("q2", 3, 0.3)],
        7,
    );
    config.classification_noise = 0.05;
    config.treatment = Some(Treatment {
        change_period: 1,
        error_rate_delta: 0.05,
    });
    let panel = inject_review_change(&config, &ReviewChangeDesign::two_period(2000, 1))?;
    let result = did_with_error_rates(&panel.cohorts, &panel.ground_truth, panel.change_period)?;
    println!(
        "simulated: effect {:+.4} (treated {:.4} -> {:.4}, control {:.4} -> {:.4})",
        result.effect,
        result.treated_pre_mean,
        result.treated_post_mean,
        result.control_pre_mean,
        result.control_post_mean
    );
    Ok(())
}
