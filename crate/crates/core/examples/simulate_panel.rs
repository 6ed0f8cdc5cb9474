//! Generate a synthetic review panel and write it as CSV.
//!
//! cargo run --example simulate_panel -- examples/panel.toml panel.csv truth.csv
//!
//! With no arguments a built-in config is used and the records go to stdout.

use std::fs::File;
use std::io::stdout;

use review_audit::agreement::{analyze_agreement, OverallKappaMode};
use review_audit::report::{write_ground_truth_csv, write_records_csv};
use review_audit::simulator::{simulate_panel, QuestionSpec, SimulationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = match args.first() {
        Some(path) => SimulationConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => {
            let mut c = SimulationConfig::new(
                5,
                3,
                vec![QuestionSpec::new("q1", 2, 0.2), QuestionSpec::new("q2", 3, 0.6)],
                1,
            );
            c.anchoring = 0.3;
            c
        }
    };
    let panel = simulate_panel(&config)?;
    match args.get(1) {
        Some(path) => write_records_csv(panel.dataset.records(), File::create(path)?)?,
        None => write_records_csv(panel.dataset.records(), stdout())?,
    }
    if let Some(path) = args.get(2) {
        write_ground_truth_csv(&panel.ground_truth, File::create(path)?)?;
    }

    let report = analyze_agreement(&panel.dataset, OverallKappaMode::Pooled)?;
    eprintln!("overall kappa {:.4}", report.overall_kappa.kappa);
    for (q, k) in &report.per_question_kappa {
        eprintln!("  {q}: {:.4}", k.kappa);
    }
    Ok(())
}
