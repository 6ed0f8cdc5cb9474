//! Chi-square independence, z/t location tests and one-way ANOVA.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ContingencyTable;
use crate::special::{tail_probability, Distribution, Tail, TailProbabilityQuery};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ChiSquare,
    Z,
    TOneSample,
    TTwoSample,
    AnovaF,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreesOfFreedom {
    None,
    Single(f64),
    Pair(f64, f64),
}

/// Outcome of a hypothesis test at a fixed significance level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_kind: TestKind,
    pub statistic: f64,
    pub df: DegreesOfFreedom,
    pub p_value: f64,
    pub tail: Tail,
    pub alpha: f64,
    pub reject_null: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl TestResult {
    fn new(test_kind: TestKind, statistic: f64, df: DegreesOfFreedom, tail: Tail, alpha: f64) -> Result<Self> {
        let mut result = Self {
            test_kind,
            statistic,
            df,
            p_value: f64::NAN,
            tail,
            alpha,
            reject_null: false,
            warnings: Vec::new(),
        };
        result.p_value = result.recompute_p_value()?;
        result.reject_null = result.p_value < alpha;
        Ok(result)
    }

    /// Reference distribution of the statistic under the null hypothesis.
    pub fn distribution(&self) -> Distribution {
        match (self.test_kind, self.df) {
            (TestKind::Z, _) => Distribution::StandardNormal,
            (TestKind::ChiSquare, DegreesOfFreedom::Single(df)) => Distribution::ChiSquare { df },
            (TestKind::AnovaF, DegreesOfFreedom::Pair(df1, df2)) => Distribution::F { df1, df2 },
            (_, DegreesOfFreedom::Single(df)) => Distribution::StudentT { df },
            (kind, df) => unreachable!("inconsistent test result {kind:?} with {df:?}"),
        }
    }

    /// Recomputes the p-value from the stored statistic, df and tail.
    pub fn recompute_p_value(&self) -> Result<f64> {
        tail_probability(&TailProbabilityQuery::new(
            self.distribution(),
            self.statistic,
            self.tail,
        ))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn check_sample(sample: &[f64], name: &str, min_len: usize) -> Result<()> {
    if sample.len() < min_len {
        return Err(Error::InvalidSample(format!(
            "{name} needs at least {min_len} observations, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSample(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], centre: f64) -> f64 {
    xs.iter().map(|x| (x - centre).powi(2)).sum()
}

/// Unbiased sample variance (two-pass).
fn variance(xs: &[f64]) -> f64 {
    sum_sq_dev(xs, mean(xs)) / (xs.len() as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOptions {
    pub alpha: f64,
    /// Yates continuity correction, applied to 2×2 tables only.
    pub yates: bool,
}

impl Default for ChiSquareOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            yates: false,
        }
    }
}

/// Pearson chi-square test of independence, `Σ (O − E)² / E` against the
/// upper tail of chi-square with `(R − 1)(C − 1)` degrees of freedom.
pub fn chi_square_independence(table: &ContingencyTable, alpha: f64) -> Result<TestResult> {
    chi_square_independence_with(table, ChiSquareOptions { alpha, yates: false })
}

pub fn chi_square_independence_with(table: &ContingencyTable, options: ChiSquareOptions) -> Result<TestResult> {
    check_alpha(options.alpha)?;
    let rows = table.observed.len();
    let cols = table.observed.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return Err(Error::DegenerateTable(format!(
            "shape {rows}x{cols}, need at least 2x2"
        )));
    }
    if table.expected.iter().flatten().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::DegenerateTable("zero expected count".into()));
    }
    let correct = options.yates && rows == 2 && cols == 2;
    let statistic: f64 = table
        .observed
        .iter()
        .flatten()
        .zip(table.expected.iter().flatten())
        .map(|(&o, &e)| {
            let mut diff = (o as f64 - e).abs();
            if correct {
                diff = (diff - 0.5).max(0.0);
            }
            diff * diff / e
        })
        .sum();
    let df = ((rows - 1) * (cols - 1)) as f64;
    let mut result = TestResult::new(
        TestKind::ChiSquare,
        statistic,
        DegreesOfFreedom::Single(df),
        Tail::Upper,
        options.alpha,
    )?;
    let min_expected = table.expected.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    if min_expected < 5.0 {
        result.warnings.push(format!(
            "low expected count: minimum expected cell is {min_expected:.3} (< 5)"
        ));
    }
    if options.yates && !correct {
        result
            .warnings
            .push("continuity correction only applies to 2x2 tables; not applied".into());
    }
    Ok(result)
}

/// One-sample location test of `H0: μ = mu0` against the alternative given by `tail`.
///
/// With a known population standard deviation this is a z test; otherwise a
/// t test with `n − 1` degrees of freedom.
pub fn one_sample_location_test(
    sample: &[f64],
    mu0: f64,
    tail: Tail,
    sigma: Option<f64>,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let n = sample.len() as f64;
    match sigma {
        Some(sigma) => {
            if sigma.is_nan() || sigma <= 0.0 || !sigma.is_finite() {
                return Err(Error::InvalidSample(format!("sigma must be positive, got {sigma}")));
            }
            check_sample(sample, "sample", 1)?;
            let z = (mean(sample) - mu0) / (sigma / n.sqrt());
            TestResult::new(TestKind::Z, z, DegreesOfFreedom::None, tail, alpha)
        }
        None => {
            check_sample(sample, "sample", 2)?;
            let s = variance(sample).sqrt();
            if s == 0.0 {
                return Err(Error::ZeroVariance("sample standard deviation is zero".into()));
            }
            let t = (mean(sample) - mu0) / (s / n.sqrt());
            TestResult::new(TestKind::TOneSample, t, DegreesOfFreedom::Single(n - 1.0), tail, alpha)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSampleVariant {
    Pooled,
    #[default]
    Welch,
}

/// Two-sample t test of `mean(a) − mean(b)`.
pub fn two_sample_t(a: &[f64], b: &[f64], variant: TwoSampleVariant, tail: Tail, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_sample(a, "first sample", 2)?;
    check_sample(b, "second sample", 2)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a), variance(b));
    let diff = mean(a) - mean(b);
    let (se, df) = match variant {
        TwoSampleVariant::Pooled => {
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), na + nb - 2.0)
        }
        TwoSampleVariant::Welch => {
            let (wa, wb) = (va / na, vb / nb);
            let df = (wa + wb).powi(2) / (wa * wa / (na - 1.0) + wb * wb / (nb - 1.0));
            ((wa + wb).sqrt(), df)
        }
    };
    if se == 0.0 {
        return Err(Error::ZeroVariance("both samples are constant".into()));
    }
    TestResult::new(
        TestKind::TTwoSample,
        diff / se,
        DegreesOfFreedom::Single(df),
        tail,
        alpha,
    )
}

/// Treatment / error decomposition of a one-way layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaDecomposition {
    pub ss_treatment: f64,
    pub ss_error: f64,
    pub ms_treatment: f64,
    pub ms_error: f64,
    pub f_obs: f64,
    pub v1: usize,
    pub v2: usize,
    pub group_sizes: Vec<usize>,
    pub group_means: Vec<f64>,
    pub grand_mean: f64,
}

/// One-way ANOVA F test of equal group means.
///
/// `SSTr = Σ_i n_i (ȳ_i· − ȳ··)²`, `SSE = Σ_i Σ_j (y_ij − ȳ_i·)²`,
/// `F = (SSTr / (k − 1)) / (SSE / (n − k))` against the upper tail of
/// `F(k − 1, n − k)`.
pub fn one_way_anova<S: AsRef<[f64]>>(groups: &[S], alpha: f64) -> Result<(TestResult, AnovaDecomposition)> {
    check_alpha(alpha)?;
    let k = groups.len();
    if k < 2 {
        return Err(Error::InvalidSample(format!("ANOVA needs at least 2 groups, got {k}")));
    }
    for (i, g) in groups.iter().enumerate() {
        check_sample(g.as_ref(), &format!("group {i}"), 1)?;
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= k {
        return Err(Error::InvalidSample(format!(
            "ANOVA needs more observations ({n}) than groups ({k})"
        )));
    }
    let group_sizes: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    let group_means: Vec<f64> = groups.iter().map(|g| mean(g.as_ref())).collect();
    let grand_mean = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / n as f64;

    let ss_treatment: f64 = group_sizes
        .iter()
        .zip(&group_means)
        .map(|(&ni, &m)| ni as f64 * (m - grand_mean).powi(2))
        .sum();
    let ss_error: f64 = groups
        .iter()
        .zip(&group_means)
        .map(|(g, &m)| sum_sq_dev(g.as_ref(), m))
        .sum();
    let (v1, v2) = (k - 1, n - k);
    let ms_treatment = ss_treatment / v1 as f64;
    let ms_error = ss_error / v2 as f64;
    if ms_error == 0.0 {
        return Err(Error::ZeroVariance("every group is internally constant".into()));
    }
    let f_obs = ms_treatment / ms_error;
    let test = TestResult::new(
        TestKind::AnovaF,
        f_obs,
        DegreesOfFreedom::Pair(v1 as f64, v2 as f64),
        Tail::Upper,
        alpha,
    )?;
    Ok((
        test,
        AnovaDecomposition {
            ss_treatment,
            ss_error,
            ms_treatment,
            ms_error,
            f_obs,
            v1,
            v2,
            group_sizes,
            group_means,
            grand_mean,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn chi_square_golden() {
        let t = ContingencyTable::from_counts(vec![vec![10, 20], vec![20, 10]]).unwrap();
        let r = chi_square_independence(&t, 0.05).unwrap();
        close(r.statistic, 20.0 / 3.0, 1e-12);
        assert_eq!(r.df, DegreesOfFreedom::Single(1.0));
        close(r.p_value, 0.009_823_274_507_519_248, 1e-10);
        assert!(r.reject_null);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn chi_square_independent_rows() {
        let t = ContingencyTable::from_counts(vec![vec![10, 20], vec![20, 40]]).unwrap();
        let r = chi_square_independence(&t, 0.05).unwrap();
        close(r.statistic, 0.0, 1e-12);
        close(r.p_value, 1.0, 1e-12);
        assert!(!r.reject_null);
    }

    #[test]
    fn chi_square_yates_and_warnings() {
        let t = ContingencyTable::from_counts(vec![vec![3, 1], vec![1, 3]]).unwrap();
        let plain = chi_square_independence(&t, 0.05).unwrap();
        let corrected = chi_square_independence_with(
            &t,
            ChiSquareOptions {
                alpha: 0.05,
                yates: true,
            },
        )
        .unwrap();
        // |O − E| = 1 everywhere, E = 2
        close(plain.statistic, 2.0, 1e-12);
        close(corrected.statistic, 0.5, 1e-12);
        assert_eq!(plain.warnings.len(), 1);
        assert!(chi_square_independence(&t, 1.0).is_err());
    }

    #[test]
    fn z_and_t_one_sample() {
        let r = one_sample_location_test(&[0.0, 1.0, 2.0, 1.0], 0.0, Tail::Upper, Some(2.0), 0.05).unwrap();
        close(r.statistic, 1.0, 1e-15);
        close(r.p_value, 0.158_655_253_931_457_05, 1e-10);
        let r = one_sample_location_test(&[1.0, 2.0, 3.0], 2.0, Tail::TwoSided, None, 0.05).unwrap();
        close(r.statistic, 0.0, 1e-15);
        close(r.p_value, 1.0, 1e-12);
        assert!(matches!(
            one_sample_location_test(&[4.0, 4.0, 4.0], 2.0, Tail::TwoSided, None, 0.05),
            Err(Error::ZeroVariance(_))
        ));
        assert!(one_sample_location_test(&[], 0.0, Tail::Upper, Some(1.0), 0.05).is_err());
        assert!(one_sample_location_test(&[1.0], 0.0, Tail::Upper, Some(0.0), 0.05).is_err());
    }

    #[test]
    fn pooled_two_sample_golden() {
        let r = two_sample_t(
            &[1.0, 2.0, 3.0],
            &[2.0, 3.0, 4.0],
            TwoSampleVariant::Pooled,
            Tail::TwoSided,
            0.05,
        )
        .unwrap();
        close(r.statistic, -1.224_744_871_391_589, 1e-12);
        assert_eq!(r.df, DegreesOfFreedom::Single(4.0));
        close(r.p_value, 0.287_864_134_726_690_7, 1e-10);
        let swapped = two_sample_t(
            &[2.0, 3.0, 4.0],
            &[1.0, 2.0, 3.0],
            TwoSampleVariant::Pooled,
            Tail::TwoSided,
            0.05,
        )
        .unwrap();
        assert_eq!(swapped.statistic, -r.statistic);
        close(swapped.p_value, r.p_value, 1e-15);
    }

    #[test]
    fn welch_matches_pooled_for_equal_sizes_and_variances() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 3.0, 4.0];
        let w = two_sample_t(&a, &b, TwoSampleVariant::Welch, Tail::TwoSided, 0.05).unwrap();
        let p = two_sample_t(&a, &b, TwoSampleVariant::Pooled, Tail::TwoSided, 0.05).unwrap();
        close(w.statistic, p.statistic, 1e-12);
        assert_eq!(w.df, DegreesOfFreedom::Single(4.0));
        assert!(matches!(
            two_sample_t(&[1.0, 1.0], &[1.0, 1.0], TwoSampleVariant::Welch, Tail::TwoSided, 0.05),
            Err(Error::ZeroVariance(_))
        ));
        let identical = two_sample_t(&a, &a, TwoSampleVariant::Welch, Tail::TwoSided, 0.05).unwrap();
        close(identical.p_value, 1.0, 1e-12);
    }

    #[test]
    fn anova_golden() {
        let (r, d) = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]], 0.05).unwrap();
        close(d.ss_treatment, 1.5, 1e-12);
        close(d.ss_error, 4.0, 1e-12);
        close(d.f_obs, 1.5, 1e-12);
        assert_eq!((d.v1, d.v2), (1, 4));
        close(r.p_value, 0.287_864_134_726_690_7, 1e-10);
    }

    #[test]
    fn anova_equal_means_and_errors() {
        let (r, d) = one_way_anova(&[vec![1.0, 3.0], vec![0.0, 4.0], vec![2.0, 2.0]], 0.05).unwrap();
        close(d.ss_treatment, 0.0, 1e-12);
        close(r.p_value, 1.0, 1e-12);
        assert!(matches!(
            one_way_anova(&[vec![1.0, 1.0], vec![2.0, 2.0]], 0.05),
            Err(Error::ZeroVariance(_))
        ));
        assert!(one_way_anova(&[vec![1.0, 2.0]], 0.05).is_err());
        assert!(one_way_anova(&[vec![1.0], vec![2.0]], 0.05).is_err());
    }

    #[test]
    fn anova_group_order_irrelevant() {
        let g = [vec![1.0, 2.5, 3.0], vec![2.0, 3.0, 4.5, 5.0], vec![0.5, 1.0]];
        let (a, _) = one_way_anova(&g, 0.05).unwrap();
        let (b, _) = one_way_anova(&[g[2].clone(), g[0].clone(), g[1].clone()], 0.05).unwrap();
        close(a.statistic, b.statistic, 1e-12);
        close(a.p_value, b.p_value, 1e-12);
    }
}
