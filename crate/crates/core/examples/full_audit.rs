//! The whole audit pipeline: ingest CSV, validate, run every section and
//! render the report.
//!
//! cargo run --example full_audit -- reviews.csv [truth.csv]
//!
//! Without arguments a simulated two-team panel is audited.

use review_audit::model::{validate_dataset, IncompletePolicy};
use review_audit::report::{
    emit_report, ingest_csv_path, read_ground_truth_path, run_audit, AuditOptions, ReportFormat,
};
use review_audit::simulator::{simulate_panel, QuestionSpec, SimulationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut options = AuditOptions::default();
    let dataset = match args.first() {
        Some(path) => {
            if let Some(truth) = args.get(1) {
                options.ground_truth = Some(read_ground_truth_path(truth)?);
            }
            validate_dataset(ingest_csv_path(path)?, IncompletePolicy::Drop)?
        }
        None => {
            let mut config = SimulationConfig::new(
                300,
                3,
                vec![
                    QuestionSpec::new("labeling", 2, 0.1),
                    QuestionSpec::new("packaging", 3, 0.3),
                    QuestionSpec::new("warnings", 2, 0.7),
                ],
                11,
            );
            config.classification_noise = 0.05;
            config.teams = vec!["east".into(), "west".into()];
            let panel = simulate_panel(&config)?;
            options.ground_truth = Some(panel.ground_truth);
            panel.dataset
        }
    };

    let report = run_audit(&dataset, &options)?;
    print!("{}", emit_report(&report, ReportFormat::Text));
    if report.is_partial() {
        eprintln!("some sections failed");
    }
    Ok(())
}
