//! The full audit pipeline.

use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agreement::{analyze_agreement, AgreementReport, OverallKappaMode};
use crate::did::{cohorts_from_dataset, did_with_error_rates, DidResult};
use crate::error::{Error, Result};
use crate::estimation::{bias_factor_report, binomial_ci, BiasFactorReport, BinomialInterval, CiMethod, Factor};
use crate::hypothesis::{
    chi_square_independence_with, one_way_anova, two_sample_t, AnovaDecomposition, ChiSquareOptions, TestResult,
    TwoSampleVariant, DEFAULT_ALPHA,
};
use crate::model::{contingency_from, unit_errors, ErrorReference, ReviewDataset};
use crate::special::Tail;

pub const SCHEMA_VERSION: u32 = 1;

/// Significant digits kept for every float in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Outcome of one report section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Section<T> {
    Ok(T),
    Skipped(String),
    Error(String),
}

impl<T> Section<T> {
    pub fn from_result(result: Result<T>) -> Self {
        match result {
            Ok(v) => Section::Ok(v),
            Err(e) => Section::Error(e.to_string()),
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Section::Error(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub alpha: f64,
    pub overall_kappa: OverallKappaMode,
    pub ci_method: CiMethod,
    pub ci_level: f64,
    /// Continuity correction on 2×2 chi-square tables.
    pub yates: bool,
    pub team_test_variant: TwoSampleVariant,
    /// First post-change period; enables the DiD section.
    pub change_period: Option<i64>,
    /// Questions used as bias factors. `None` takes every question with at
    /// least two observed answers.
    pub bias_factors: Option<Vec<String>>,
    /// Product id → true classification. Without it, errors are measured
    /// against each product's consensus classification.
    #[serde(skip)]
    pub ground_truth: Option<BTreeMap<String, String>>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            overall_kappa: OverallKappaMode::default(),
            ci_method: CiMethod::default(),
            ci_level: 0.95,
            yates: false,
            team_test_variant: TwoSampleVariant::default(),
            change_period: None,
            bias_factors: None,
            ground_truth: None,
        }
    }
}

impl AuditOptions {
    fn reference(&self) -> ErrorReference {
        match &self.ground_truth {
            Some(t) => ErrorReference::GroundTruth(t.clone()),
            None => ErrorReference::Consensus,
        }
    }

    fn reference_name(&self) -> &'static str {
        if self.ground_truth.is_some() {
            "ground_truth"
        } else {
            "consensus"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub input_records: usize,
    pub kept_records: usize,
    pub dropped_cells: usize,
    pub dropped_records: usize,
    pub raters_per_cell: usize,
    pub products: usize,
    pub reviewers: Vec<String>,
    pub questions: Vec<String>,
}

impl DatasetSummary {
    pub fn of(dataset: &ReviewDataset) -> Self {
        let s = dataset.summary();
        Self {
            input_records: s.input_records,
            kept_records: s.kept_records,
            dropped_cells: s.dropped_cells,
            dropped_records: s.dropped_records,
            raters_per_cell: s.raters_per_cell,
            products: dataset.products().len(),
            reviewers: dataset.reviewers().to_vec(),
            questions: dataset.questions().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamErrorSummary {
    pub team: String,
    pub units: usize,
    pub errors: usize,
    pub error_rate: f64,
}

/// Comparison of per-team reviewer error rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamComparison {
    pub teams: Vec<TeamErrorSummary>,
    pub test: TestResult,
    /// Present when more than two teams were compared.
    pub anova: Option<AnovaDecomposition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorExtrapolation {
    pub overall: BinomialInterval,
    pub per_reviewer: BTreeMap<String, BinomialInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub config: AuditOptions,
    /// `ground_truth` or `consensus`.
    pub error_reference: String,
    pub dataset: DatasetSummary,
    pub agreement: Section<AgreementReport>,
    pub chi_square: Section<BTreeMap<String, Section<TestResult>>>,
    pub team_comparison: Section<TeamComparison>,
    pub error_extrapolation: Section<ErrorExtrapolation>,
    pub bias_factors: Section<BiasFactorReport>,
    pub did: Section<DidResult>,
}

impl AuditReport {
    /// True when at least one section errored.
    pub fn is_partial(&self) -> bool {
        self.agreement.is_error()
            || self.chi_square.is_error()
            || self.team_comparison.is_error()
            || self.error_extrapolation.is_error()
            || self.bias_factors.is_error()
            || self.did.is_error()
    }

    fn any_ok(&self) -> bool {
        self.agreement.ok().is_some()
            || self.chi_square.ok().is_some()
            || self.team_comparison.ok().is_some()
            || self.error_extrapolation.ok().is_some()
            || self.bias_factors.ok().is_some()
            || self.did.ok().is_some()
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round_significant(x)))
            {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Rounds every float in `value` to report precision. Fails on
/// non-finite floats, which JSON cannot carry.
pub fn canonicalize<T: Serialize + DeserializeOwned>(value: &T) -> Result<T> {
    let mut json = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    round_value(&mut json);
    serde_json::from_value(json).map_err(|_| Error::InvalidSample("result contains a non-finite value".into()))
}

fn canonical_section<T: Serialize + DeserializeOwned>(section: Section<T>) -> Section<T> {
    match section {
        Section::Ok(v) => Section::from_result(canonicalize(&v)),
        other => other,
    }
}

/// Chi-square test of every question's answers against the reviewers'
/// classifications.
pub fn chi_square_by_question(
    dataset: &ReviewDataset,
    options: ChiSquareOptions,
) -> BTreeMap<String, Section<TestResult>> {
    dataset
        .questions()
        .iter()
        .map(|q| {
            let result = contingency_from(dataset, q).and_then(|t| chi_square_independence_with(&t, options));
            (q.clone(), Section::from_result(result))
        })
        .collect()
}

/// Welch/pooled t test for two teams, one-way ANOVA for more.
pub fn team_comparison(
    dataset: &ReviewDataset,
    reference: &ErrorReference,
    variant: TwoSampleVariant,
    alpha: f64,
) -> Section<TeamComparison> {
    let units = match unit_errors(dataset, reference) {
        Ok(u) => u,
        Err(e) => return Section::Error(e.to_string()),
    };
    let mut by_team: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (unit, wrong) in &units {
        if let Some(team) = &unit.team {
            by_team
                .entry(team.clone())
                .or_default()
                .push(if *wrong { 1.0 } else { 0.0 });
        }
    }
    match by_team.len() {
        0 => return Section::Skipped("no team data".into()),
        1 => return Section::Skipped("only one team".into()),
        _ => {}
    }
    let teams = by_team
        .iter()
        .map(|(team, xs)| {
            let errors = xs.iter().filter(|&&x| x == 1.0).count();
            TeamErrorSummary {
                team: team.clone(),
                units: xs.len(),
                errors,
                error_rate: errors as f64 / xs.len() as f64,
            }
        })
        .collect();
    let groups: Vec<&Vec<f64>> = by_team.values().collect();
    let result = if groups.len() == 2 {
        two_sample_t(groups[0], groups[1], variant, Tail::TwoSided, alpha).map(|test| TeamComparison {
            teams,
            test,
            anova: None,
        })
    } else {
        let slices: Vec<&[f64]> = groups.iter().map(|g| g.as_slice()).collect();
        one_way_anova(&slices, alpha).map(|(test, anova)| TeamComparison {
            teams,
            test,
            anova: Some(anova),
        })
    };
    Section::from_result(result)
}

/// Binomial intervals on the error rate, overall and per reviewer.
pub fn error_extrapolation(
    dataset: &ReviewDataset,
    reference: &ErrorReference,
    level: f64,
    method: CiMethod,
) -> Result<ErrorExtrapolation> {
    let units = unit_errors(dataset, reference)?;
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for (unit, wrong) in &units {
        let c = counts.entry(unit.reviewer_id.as_str()).or_default();
        c.0 += u64::from(*wrong);
        c.1 += 1;
    }
    let wrong = units.iter().filter(|(_, w)| *w).count() as u64;
    Ok(ErrorExtrapolation {
        overall: binomial_ci(wrong, units.len() as u64, level, method)?,
        per_reviewer: counts
            .into_iter()
            .map(|(r, (x, n))| Ok((r.to_string(), binomial_ci(x, n, level, method)?)))
            .collect::<Result<_>>()?,
    })
}

/// Questions with at least two distinct observed answers.
pub fn default_bias_factors(dataset: &ReviewDataset) -> Vec<Factor> {
    let mut answers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in dataset.records() {
        answers.entry(&r.question_id).or_default().insert(&r.answer);
    }
    answers
        .into_iter()
        .filter(|(_, a)| a.len() >= 2)
        .map(|(q, _)| Factor::Question(q.to_string()))
        .collect()
}

fn did_section(dataset: &ReviewDataset, options: &AuditOptions) -> Section<DidResult> {
    let Some(change) = options.change_period else {
        return Section::Skipped("no change period given".into());
    };
    if dataset
        .records()
        .iter()
        .any(|r| r.group.is_none() || r.period.is_none())
    {
        return Section::Skipped("no group/period data".into());
    }
    let truth = match &options.ground_truth {
        Some(t) => t.clone(),
        None => dataset.consensus_classifications(),
    };
    Section::from_result(cohorts_from_dataset(dataset).and_then(|c| did_with_error_rates(&c, &truth, change)))
}

/// Runs every section. Fails only when no section produced a result.
pub fn run_audit(dataset: &ReviewDataset, options: &AuditOptions) -> Result<AuditReport> {
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::InvalidAlpha(options.alpha));
    }
    let reference = options.reference();

    let agreement = Section::from_result(analyze_agreement(dataset, options.overall_kappa));

    let chi = chi_square_by_question(
        dataset,
        ChiSquareOptions {
            alpha: options.alpha,
            yates: options.yates,
        },
    );
    let chi_square = if chi.values().all(Section::is_error) {
        Section::Error("no question produced a chi-square test".into())
    } else {
        Section::Ok(chi)
    };

    let team = team_comparison(dataset, &reference, options.team_test_variant, options.alpha);
    let extrapolation = Section::from_result(error_extrapolation(
        dataset,
        &reference,
        options.ci_level,
        options.ci_method,
    ));

    let factors = match &options.bias_factors {
        Some(qs) => qs.iter().cloned().map(Factor::Question).collect(),
        None => default_bias_factors(dataset),
    };
    let bias = if factors.is_empty() {
        Section::Skipped("no question has two or more observed answers".into())
    } else {
        Section::from_result(bias_factor_report(dataset, &factors))
    };

    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: canonicalize(options)?,
        error_reference: options.reference_name().to_string(),
        dataset: DatasetSummary::of(dataset),
        agreement: canonical_section(agreement),
        chi_square: canonical_section(chi_square),
        team_comparison: canonical_section(team),
        error_extrapolation: canonical_section(extrapolation),
        bias_factors: canonical_section(bias),
        did: canonical_section(did_section(dataset, options)),
    };
    if !report.any_ok() {
        return Err(Error::AllSectionsFailed);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_dataset, IncompletePolicy, ReviewRecord};

    fn panel(teams: &[&str]) -> ReviewDataset {
        let mut records = Vec::new();
        for p in 0..12 {
            let team = teams[p % teams.len()];
            for r in 0..3 {
                let answer = if (p + r) % 3 == 0 { "no" } else { "yes" };
                let class = if (p * 7 + r) % 4 == 0 { "reject" } else { "approve" };
                for q in ["q1", "q2"] {
                    let mut rec = ReviewRecord::new(format!("p{p:02}"), format!("r{r}"), q, answer, class);
                    if !team.is_empty() {
                        rec = rec.with_team(team);
                    }
                    records.push(rec);
                }
            }
        }
        validate_dataset(records, IncompletePolicy::Drop).unwrap()
    }

    #[test]
    fn two_teams_use_t_test() {
        let report = run_audit(&panel(&["a", "b"]), &AuditOptions::default()).unwrap();
        let team = report.team_comparison.ok().unwrap();
        assert_eq!(team.test.test_kind, crate::hypothesis::TestKind::TTwoSample);
        assert!(team.anova.is_none());
    }

    #[test]
    fn three_teams_use_anova() {
        let report = run_audit(&panel(&["a", "b", "c"]), &AuditOptions::default()).unwrap();
        let team = report.team_comparison.ok().unwrap();
        assert_eq!(team.test.test_kind, crate::hypothesis::TestKind::AnovaF);
        assert!(team.anova.is_some());
    }

    #[test]
    fn no_team_column_is_skipped() {
        let report = run_audit(&panel(&[""]), &AuditOptions::default()).unwrap();
        assert_eq!(report.team_comparison, Section::Skipped("no team data".into()));
        assert_eq!(report.did, Section::Skipped("no change period given".into()));
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [1.0 / 3.0, -2.0 / 7.0, 1e-300, 6.02214076e23, 0.1 + 0.2] {
            let r = round_significant(x);
            assert_eq!(round_significant(r), r);
            assert!((r - x).abs() <= 1e-11 * x.abs());
        }
    }

    #[test]
    fn missing_ground_truth_fails_dependent_sections_only() {
        let options = AuditOptions {
            ground_truth: Some(BTreeMap::new()),
            ..AuditOptions::default()
        };
        let report = run_audit(&panel(&["a", "b"]), &options).unwrap();
        assert!(report.agreement.ok().is_some());
        assert!(report.error_extrapolation.is_error());
        assert!(report.team_comparison.is_error());
        assert!(report.is_partial());
    }
}
