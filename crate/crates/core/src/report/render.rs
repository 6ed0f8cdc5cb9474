//! JSON and plain-text renderings of an [`AuditReport`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::audit::{round_significant, AuditReport, Section};
use crate::did::SeriesPoint;
use crate::estimation::{BinomialInterval, CiMethod, ModelKind, ModelOutcome};
use crate::hypothesis::{DegreesOfFreedom, TestKind, TestResult};

pub(crate) fn test_name(kind: TestKind) -> &'static str {
    match kind {
        TestKind::ChiSquare => "chi-square",
        TestKind::Z => "z test",
        TestKind::TOneSample => "one-sample t",
        TestKind::TTwoSample => "two-sample t",
        TestKind::AnovaF => "ANOVA F",
    }
}

fn ci_name(method: CiMethod) -> &'static str {
    match method {
        CiMethod::ClopperPearson => "Clopper-Pearson",
        CiMethod::Wilson => "Wilson",
    }
}

fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Ols => "OLS",
        ModelKind::Logistic => "logistic",
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Text,
}

pub fn emit_report(report: &AuditReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => to_json(report),
        ReportFormat::Text => render_text(report),
    }
}

/// Pretty JSON with a trailing newline. Key order follows field order and
/// `BTreeMap` ordering, so equal values give identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values are finite");
    s.push('\n');
    s
}

pub fn parse_report(json: &str) -> serde_json::Result<AuditReport> {
    serde_json::from_str(json)
}

/// Report precision, switching to exponent form outside [1e-4, 1e9).
pub fn format_number(x: f64) -> String {
    let x = round_significant(x);
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e9) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn status<T>(section: &Section<T>) -> Option<String> {
    match section {
        Section::Ok(_) => None,
        Section::Skipped(reason) => Some(format!("skipped: {reason}")),
        Section::Error(e) => Some(format!("error: {e}")),
    }
}

fn df(d: &DegreesOfFreedom) -> String {
    match d {
        DegreesOfFreedom::None => String::new(),
        DegreesOfFreedom::Single(v) => format!(" df={}", format_number(*v)),
        DegreesOfFreedom::Pair(a, b) => format!(" df=({}, {})", format_number(*a), format_number(*b)),
    }
}

fn test_line(t: &TestResult) -> String {
    format!(
        "statistic={}{} p={} {}",
        format_number(t.statistic),
        df(&t.df),
        format_number(t.p_value),
        if t.reject_null { "reject H0" } else { "retain H0" }
    )
}

fn interval(ci: &BinomialInterval) -> String {
    format!(
        "{}/{} = {} [{}, {}]",
        ci.x,
        ci.n,
        format_number(ci.estimate()),
        format_number(ci.lower),
        format_number(ci.upper)
    )
}

fn series(out: &mut String, title: &str, points: &[SeriesPoint]) {
    let _ = writeln!(out, "  {title} (period, value):");
    for p in points {
        let _ = writeln!(out, "    ({}, {})", p.period, format_number(p.value));
    }
}

pub fn render_text(report: &AuditReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "review audit (schema {}, toolkit {})",
        report.schema_version, report.toolkit_version
    );

    let _ = writeln!(out, "\nDisagreement ranking (lowest kappa first)");
    match &report.agreement {
        Section::Ok(a) => {
            for (i, q) in a.disagreement_ranking.iter().enumerate() {
                match a.per_question_kappa.get(q) {
                    Some(k) => {
                        let _ = writeln!(out, "  {}. {q}  kappa={}", i + 1, format_number(k.kappa));
                    }
                    None => {
                        let reason = a.per_question_errors.get(q).map(String::as_str).unwrap_or("");
                        let _ = writeln!(out, "  {}. {q}  kappa undefined ({reason})", i + 1);
                    }
                }
            }
            let mode = match a.overall_kappa.mode {
                crate::agreement::OverallKappaMode::Pooled => "pooled",
                crate::agreement::OverallKappaMode::MeanOfQuestions => "mean of questions",
            };
            let _ = writeln!(
                out,
                "  overall kappa ({mode}): {}",
                format_number(a.overall_kappa.kappa)
            );
            match a.agreement_rate {
                Some(r) => {
                    let _ = writeln!(out, "  complete-consensus rate: {}", format_number(r));
                }
                None => {
                    let _ = writeln!(out, "  complete-consensus rate: n/a");
                }
            }
        }
        other => {
            let _ = writeln!(out, "  {}", status(other).unwrap_or_default());
        }
    }

    let d = &report.dataset;
    let _ = writeln!(out, "\nDataset");
    let _ = writeln!(
        out,
        "  {} products, {} reviewers, {} questions, {} raters per cell",
        d.products,
        d.reviewers.len(),
        d.questions.len(),
        d.raters_per_cell
    );
    let _ = writeln!(
        out,
        "  {} of {} records kept ({} incomplete cells dropped)",
        d.kept_records, d.input_records, d.dropped_cells
    );
    let _ = writeln!(out, "  errors measured against: {}", report.error_reference);

    let _ = writeln!(out, "\nChi-square: answer vs classification");
    match &report.chi_square {
        Section::Ok(per_q) => {
            for (q, s) in per_q {
                match s {
                    Section::Ok(t) => {
                        let _ = writeln!(out, "  {q}: {}", test_line(t));
                        for w in &t.warnings {
                            let _ = writeln!(out, "    warning: {w}");
                        }
                    }
                    other => {
                        let _ = writeln!(out, "  {q}: {}", status(other).unwrap_or_default());
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "  {}", status(other).unwrap_or_default());
        }
    }

    let _ = writeln!(out, "\nTeam comparison");
    match &report.team_comparison {
        Section::Ok(t) => {
            for team in &t.teams {
                let _ = writeln!(
                    out,
                    "  {}: {}/{} errors ({})",
                    team.team,
                    team.errors,
                    team.units,
                    format_number(team.error_rate)
                );
            }
            let _ = writeln!(out, "  {}: {}", test_name(t.test.test_kind), test_line(&t.test));
        }
        other => {
            let _ = writeln!(out, "  {}", status(other).unwrap_or_default());
        }
    }

    let _ = writeln!(out, "\nError rate");
    match &report.error_extrapolation {
        Section::Ok(e) => {
            let _ = writeln!(
                out,
                "  overall: {} ({}, {})",
                interval(&e.overall),
                ci_name(e.overall.method),
                e.overall.level
            );
            for (r, ci) in &e.per_reviewer {
                let _ = writeln!(out, "  {r}: {}", interval(ci));
            }
        }
        other => {
            let _ = writeln!(out, "  {}", status(other).unwrap_or_default());
        }
    }

    let _ = writeln!(out, "\nBias factors");
    match &report.bias_factors {
        Section::Ok(b) => {
            let _ = writeln!(
                out,
                "  {} units, positive class `{}`, ranked by {}",
                b.n_units,
                b.positive_label,
                model_name(b.ranked_by)
            );
            if let ModelOutcome::Failed { error } = &b.logistic {
                let _ = writeln!(out, "  logistic model failed: {error}");
            }
            if let ModelOutcome::Failed { error } = &b.ols {
                let _ = writeln!(out, "  OLS model failed: {error}");
            }
            for c in &b.ranked {
                let fmt = |v: Option<f64>| v.map(format_number).unwrap_or_else(|| "n/a".into());
                let _ = writeln!(
                    out,
                    "  {}: logistic={} ols={}",
                    c.column,
                    fmt(c.logistic_coefficient),
                    fmt(c.ols_coefficient)
                );
            }
        }
        other => {
            let _ = writeln!(out, "  {}", status(other).unwrap_or_default());
        }
    }

    let _ = writeln!(out, "\nDifference-in-differences");
    match &report.did {
        Section::Ok(d) => {
            let _ = writeln!(
                out,
                "  effect: {} (change at period {})",
                format_number(d.effect),
                d.change_period
            );
            let _ = writeln!(
                out,
                "  treated pre/post: {} / {}; control pre/post: {} / {}",
                format_number(d.treated_pre_mean),
                format_number(d.treated_post_mean),
                format_number(d.control_pre_mean),
                format_number(d.control_post_mean)
            );
            series(&mut out, "treated series", &d.treated_series);
            series(&mut out, "control series", &d.control_series);
            series(&mut out, "counterfactual series", &d.counterfactual);
        }
        other => {
            let _ = writeln!(out, "  {}", status(other).unwrap_or_default());
        }
    }
    out
}
