//! Which rubric answers drive the final classification, by OLS and
//! logistic regression on a simulated panel.
//!
//! cargo run --example bias_factors

use review_audit::estimation::{bias_factor_report, Factor};
use review_audit::simulator::{simulate_panel, QuestionSpec, SimulationConfig};

fn main() -> review_audit::Result<()> {
    let mut config = SimulationConfig::new(
        600,
        3,
        vec![
            QuestionSpec::new("labeling", 2, 0.1).with_weight(3.0),
            QuestionSpec::new("packaging", 3, 0.3),
            QuestionSpec::new("warnings", 2, 0.2),
        ],
        42,
    );
    config.classification_noise = 0.1;
    config.teams = vec!["east".into(), "west".into()];
    let panel = simulate_panel(&config)?;

    let factors = [
        Factor::Question("labeling".into()),
        Factor::Question("packaging".into()),
        Factor::Question("warnings".into()),
        Factor::Team,
    ];
    let report = bias_factor_report(&panel.dataset, &factors)?;
    println!("{} units, positive class `{}`", report.n_units, report.positive_label);
    println!("reference levels: {:?}", report.reference_levels);
    println!("{:<22} {:>10} {:>10}", "column", "ols", "logistic");
    for c in &report.ranked {
        println!(
            "{:<22} {:>10.4} {:>10.4}",
            c.column,
            c.ols_coefficient.unwrap_or(f64::NAN),
            c.logistic_coefficient.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
