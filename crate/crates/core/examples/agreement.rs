//! Fleiss Kappa per question and overall, from long-format review records.
//!
//! cargo run --example agreement

use review_audit::agreement::{analyze_agreement, fleiss_kappa, OverallKappaMode};
use review_audit::model::{validate_dataset, IncompletePolicy, RatingMatrix, ReviewRecord};

fn main() -> review_audit::Result<()> {
    // three reviewers rate four products on two rubric questions
    let answers = [
        ("p1", "origin", ["domestic", "domestic", "domestic"]),
        ("p2", "origin", ["domestic", "import", "domestic"]),
        ("p3", "origin", ["import", "import", "import"]),
        ("p4", "origin", ["import", "import", "domestic"]),
        ("p1", "hazard", ["none", "low", "high"]),
        ("p2", "hazard", ["low", "none", "low"]),
        ("p3", "hazard", ["high", "low", "none"]),
        ("p4", "hazard", ["none", "none", "high"]),
    ];
    let mut records = Vec::new();
    for (product, question, by_reviewer) in answers {
        for (i, answer) in by_reviewer.iter().enumerate() {
            records.push(ReviewRecord::new(
                product,
                format!("r{}", i + 1),
                question,
                *answer,
                "approve",
            ));
        }
    }
    // r3 never answered the hazard question for p4; that cell is dropped
    records.retain(|r| !(r.product_id == "p4" && r.question_id == "hazard" && r.reviewer_id == "r3"));

    let dataset = validate_dataset(records, IncompletePolicy::Drop)?;
    println!("dropped cells: {}", dataset.summary().dropped_cells);

    for mode in [OverallKappaMode::Pooled, OverallKappaMode::MeanOfQuestions] {
        let report = analyze_agreement(&dataset, mode)?;
        println!("\n{mode:?}: overall kappa {:.4}", report.overall_kappa.kappa);
        for question in &report.disagreement_ranking {
            let k = &report.per_question_kappa[question];
            println!(
                "  {question:<8} kappa {:>7.4}  p̄ {:.4}  p̄e {:.4}",
                k.kappa, k.p_bar, k.p_e_bar
            );
        }
        match report.agreement_rate {
            Some(rate) => println!("  all reviewers identical on {:.0}% of products", rate * 100.0),
            None => println!("  no product is complete on every question"),
        }
    }

    // a rating matrix can also be given directly
    let matrix = RatingMatrix::new(vec![vec![3, 0], vec![2, 1], vec![0, 3]], 3)?;
    println!("\ndirect matrix: kappa {:.4}", fleiss_kappa(&matrix)?.kappa);
    Ok(())
}
