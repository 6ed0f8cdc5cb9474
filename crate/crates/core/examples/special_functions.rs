//! Tail areas of the reference distributions and the kernels behind them.
//!
//! cargo run --example special_functions

use review_audit::special::{
    log_gamma, regularized_gamma_upper, regularized_incomplete_beta, tail_probability, Distribution, Tail,
    TailProbabilityQuery,
};

fn main() -> review_audit::Result<()> {
    let queries = [
        (Distribution::ChiSquare { df: 1.0 }, 3.841, Tail::Upper),
        (Distribution::StudentT { df: 9.0 }, 2.262, Tail::TwoSided),
        (Distribution::StudentT { df: 17.3 }, -1.5, Tail::Lower),
        (Distribution::F { df1: 2.0, df2: 27.0 }, 3.35, Tail::Upper),
        (Distribution::StandardNormal, 1.96, Tail::TwoSided),
    ];
    for (distribution, statistic, tail) in queries {
        let p = tail_probability(&TailProbabilityQuery::new(distribution, statistic, tail))?;
        println!("{distribution:?} at {statistic} ({tail:?}): {p:.6}");
    }

    println!();
    println!("ln Γ(0.5)     = {:.15}", log_gamma(0.5)?);
    println!("ln Γ(100)     = {:.10}", log_gamma(100.0)?);
    println!("Q(2.5, 3)     = {:.15}", regularized_gamma_upper(2.5, 3.0)?);
    println!("I_0.5(3, 5)   = {:.15}", regularized_incomplete_beta(0.5, 3.0, 5.0)?);

    // two-sided is undefined for the one-sided families
    let err = tail_probability(&TailProbabilityQuery::new(
        Distribution::ChiSquare { df: 2.0 },
        1.0,
        Tail::TwoSided,
    ))
    .unwrap_err();
    println!("chi-square two-sided: {err}");
    Ok(())
}
