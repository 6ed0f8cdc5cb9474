//! Chi-square independence, location tests and one-way ANOVA.
//!
//! cargo run --example hypothesis_tests

use review_audit::hypothesis::{
    chi_square_independence, chi_square_independence_with, one_sample_location_test, one_way_anova, two_sample_t,
    ChiSquareOptions, TwoSampleVariant,
};
use review_audit::model::ContingencyTable;
use review_audit::special::Tail;

fn main() -> review_audit::Result<()> {
    // answer × final classification counts
    let table = ContingencyTable::new(
        vec![vec![40, 10], vec![20, 30]],
        vec!["compliant".into(), "non-compliant".into()],
        vec!["approve".into(), "reject".into()],
    )?;
    let plain = chi_square_independence(&table, 0.05)?;
    let yates = chi_square_independence_with(
        &table,
        ChiSquareOptions {
            alpha: 0.05,
            yates: true,
        },
    )?;
    println!(
        "chi-square {:.4} (p {:.3e}), with Yates {:.4}",
        plain.statistic, plain.p_value, yates.statistic
    );

    // error rates of two review teams, per month
    let team_a = [0.061, 0.058, 0.072, 0.066, 0.059, 0.070];
    let team_b = [0.081, 0.077, 0.069, 0.090, 0.085, 0.079];
    for variant in [TwoSampleVariant::Welch, TwoSampleVariant::Pooled] {
        let t = two_sample_t(&team_a, &team_b, variant, Tail::TwoSided, 0.05)?;
        println!(
            "{variant:?} t = {:.4}, df {:?}, p = {:.4}, reject: {}",
            t.statistic, t.df, t.p_value, t.reject_null
        );
    }

    let z = one_sample_location_test(&team_a, 0.06, Tail::Upper, Some(0.005), 0.05)?;
    println!(
        "z against 6% with known sigma: {:.3}, p = {:.4}",
        z.statistic, z.p_value
    );

    let team_c = [0.060, 0.064, 0.058, 0.071, 0.066, 0.062];
    let (f, anova) = one_way_anova(&[&team_a[..], &team_b[..], &team_c[..]], 0.05)?;
    println!(
        "ANOVA F({}, {}) = {:.3}, p = {:.4}; SSTr {:.3e}, SSE {:.3e}",
        anova.v1, anova.v2, f.statistic, f.p_value, anova.ss_treatment, anova.ss_error
    );
    Ok(())
}
