//! Confidence intervals for a reviewer error rate.
//!
//! cargo run --example error_rate_ci -- 7 50

use review_audit::estimation::{binomial_ci, CiMethod};

fn main() -> review_audit::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (errors, reviewed) = match args[..] {
        [x, n] => (x, n),
        _ => (7, 50),
    };
    println!("{errors} errors in {reviewed} reviews");
    for level in [0.90, 0.95, 0.99] {
        for method in [CiMethod::ClopperPearson, CiMethod::Wilson] {
            let ci = binomial_ci(errors, reviewed, level, method)?;
            println!(
                "  {:>3.0}% {:<15} [{:.4}, {:.4}] width {:.4}",
                level * 100.0,
                format!("{method:?}"),
                ci.lower,
                ci.upper,
                ci.width()
            );
        }
    }
    Ok(())
}
