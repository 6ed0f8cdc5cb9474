//! Which rubric answers (or metadata) move the final classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::regression::{
    logistic_fit, ols_fit, Design, ModelKind, RegressionFit, DEFAULT_LOGISTIC_MAX_ITER, DEFAULT_LOGISTIC_TOL,
};
use crate::error::{Error, Result};
use crate::model::ReviewDataset;

/// A categorical factor, one-hot encoded against its lexicographically
/// first level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Question(String),
    Team,
}

impl Factor {
    fn label(&self) -> &str {
        match self {
            Factor::Question(q) => q,
            Factor::Team => "team",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ModelOutcome {
    Fitted { fit: RegressionFit },
    Failed { error: String },
}

impl ModelOutcome {
    pub fn fit(&self) -> Option<&RegressionFit> {
        match self {
            ModelOutcome::Fitted { fit } => Some(fit),
            ModelOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorCoefficient {
    /// Encoded column, `<factor>=<level>`.
    pub column: String,
    pub ols_coefficient: Option<f64>,
    pub ols_std_error: Option<f64>,
    pub logistic_coefficient: Option<f64>,
    pub logistic_std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFactorReport {
    /// Classification label encoded as 1.
    pub positive_label: String,
    pub reference_levels: BTreeMap<String, String>,
    pub n_units: usize,
    pub ols: ModelOutcome,
    pub logistic: ModelOutcome,
    /// Sorted by absolute coefficient of `ranked_by`, largest first.
    pub ranked: Vec<FactorCoefficient>,
    pub ranked_by: ModelKind,
}

/// Fits OLS (linear probability) and logistic models of the reviewer's
/// final classification on one-hot encoded factors.
///
/// Each (product, reviewer) pair that answered every factor question is
/// one observation. The classification must take exactly two values; the
/// lexicographically larger one is the positive class.
pub fn bias_factor_report(dataset: &ReviewDataset, factors: &[Factor]) -> Result<BiasFactorReport> {
    if factors.is_empty() {
        return Err(Error::InvalidSample("no factors requested".into()));
    }
    for f in factors {
        if let Factor::Question(q) = f {
            if !dataset.questions().contains(q) {
                return Err(Error::UnknownQuestion(q.clone()));
            }
        }
    }

    // (product, reviewer) -> factor -> level, final classification
    type Unit<'a> = (BTreeMap<&'a Factor, String>, &'a str);
    let mut units: BTreeMap<(&str, &str), Unit> = BTreeMap::new();
    for r in dataset.records() {
        let entry = units
            .entry((&r.product_id, &r.reviewer_id))
            .or_insert_with(|| (BTreeMap::new(), r.final_classification.as_str()));
        for f in factors {
            match f {
                Factor::Question(q) if *q == r.question_id => {
                    entry.0.insert(f, r.answer.clone());
                }
                Factor::Team => {
                    if let Some(t) = &r.team {
                        entry.0.insert(f, t.clone());
                    }
                }
                _ => {}
            }
        }
    }
    let units: Vec<(BTreeMap<&Factor, String>, &str)> = units
        .into_values()
        .filter(|(levels, _)| levels.len() == factors.len())
        .collect();
    if units.is_empty() {
        return Err(Error::Empty("no (product, reviewer) pair answered every factor".into()));
    }

    let labels: Vec<&str> = units
        .iter()
        .map(|(_, c)| *c)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.len() != 2 {
        return Err(Error::InvalidSample(format!(
            "classification must be binary for bias factors, found {} labels",
            labels.len()
        )));
    }
    let positive = labels[1];

    let mut names = Vec::new();
    let mut encoders: Vec<(&Factor, Vec<String>)> = Vec::new();
    let mut reference_levels = BTreeMap::new();
    for f in factors {
        let levels: Vec<String> = units
            .iter()
            .map(|(l, _)| l[f].clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if levels.len() < 2 {
            return Err(Error::RankDeficient {
                index: names.len() + 1,
                name: f.label().to_string(),
            });
        }
        reference_levels.insert(f.label().to_string(), levels[0].clone());
        names.extend(levels[1..].iter().map(|l| format!("{}={l}", f.label())));
        encoders.push((f, levels[1..].to_vec()));
    }

    let rows: Vec<Vec<f64>> = units
        .iter()
        .map(|(l, _)| {
            encoders
                .iter()
                .flat_map(|(f, levels)| levels.iter().map(|lv| if l[f] == *lv { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    let target: Vec<u8> = units.iter().map(|(_, c)| u8::from(*c == positive)).collect();
    let design = Design::new(names.clone(), rows)?;

    let response: Vec<f64> = target.iter().map(|&t| t as f64).collect();
    let ols = ols_fit(&design, &response);
    let logistic = logistic_fit(&design, &target, DEFAULT_LOGISTIC_MAX_ITER, DEFAULT_LOGISTIC_TOL);
    let ranked_by = match (&ols, &logistic) {
        (Err(e), Err(_)) => return Err(e.clone()),
        (_, Ok(_)) => ModelKind::Logistic,
        (Ok(_), Err(_)) => ModelKind::Ols,
    };
    let outcome = |r: Result<RegressionFit>| match r {
        Ok(fit) => ModelOutcome::Fitted { fit },
        Err(e) => ModelOutcome::Failed { error: e.to_string() },
    };
    let ols = outcome(ols);
    let logistic = outcome(logistic);

    let mut ranked: Vec<FactorCoefficient> = names
        .iter()
        .map(|name| FactorCoefficient {
            column: name.clone(),
            ols_coefficient: ols.fit().and_then(|f| f.coefficient(name)),
            ols_std_error: ols.fit().and_then(|f| f.standard_error(name)),
            logistic_coefficient: logistic.fit().and_then(|f| f.coefficient(name)),
            logistic_std_error: logistic.fit().and_then(|f| f.standard_error(name)),
        })
        .collect();
    let key = |c: &FactorCoefficient| match ranked_by {
        ModelKind::Logistic => c.logistic_coefficient.unwrap_or(0.0).abs(),
        ModelKind::Ols => c.ols_coefficient.unwrap_or(0.0).abs(),
    };
    ranked.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.column.cmp(&b.column)));

    Ok(BiasFactorReport {
        positive_label: positive.to_string(),
        reference_levels,
        n_units: units.len(),
        ols,
        logistic,
        ranked,
        ranked_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_dataset, IncompletePolicy, ReviewRecord};

    fn dataset(rows: &[(&str, &str, &str, &str)]) -> ReviewDataset {
        // (product, q1 answer, q2 answer, classification), two reviewers each
        let mut records = Vec::new();
        for (p, a1, a2, c) in rows {
            for r in ["r1", "r2"] {
                records.push(ReviewRecord::new(*p, r, "q1", *a1, *c));
                records.push(ReviewRecord::new(*p, r, "q2", *a2, *c));
            }
        }
        validate_dataset(records, IncompletePolicy::Drop).unwrap()
    }

    #[test]
    fn uncorrelated_factor_has_zero_slopes() {
        let ds = dataset(&[
            ("a", "y", "y", "approve"),
            ("b", "y", "n", "reject"),
            ("c", "n", "y", "approve"),
            ("d", "n", "n", "reject"),
        ]);
        let report = bias_factor_report(&ds, &[Factor::Question("q1".into())]).unwrap();
        let c = &report.ranked[0];
        assert_eq!(c.column, "q1=y");
        assert!(c.ols_coefficient.unwrap().abs() < 1e-10);
        assert!(c.logistic_coefficient.unwrap().abs() < 1e-8);
        assert_eq!(report.positive_label, "reject");
        assert_eq!(report.reference_levels["q1"], "n");
    }

    #[test]
    fn constant_factor_is_rank_deficient() {
        let ds = dataset(&[("a", "y", "y", "approve"), ("b", "y", "n", "reject")]);
        let err = bias_factor_report(&ds, &[Factor::Question("q1".into())]).unwrap_err();
        assert_eq!(
            err,
            Error::RankDeficient {
                index: 1,
                name: "q1".into()
            }
        );
    }

    #[test]
    fn separation_keeps_ols() {
        let ds = dataset(&[
            ("a", "y", "y", "reject"),
            ("b", "y", "n", "reject"),
            ("c", "n", "y", "approve"),
            ("d", "n", "n", "approve"),
        ]);
        let report = bias_factor_report(&ds, &[Factor::Question("q1".into())]).unwrap();
        assert!(matches!(report.logistic, ModelOutcome::Failed { .. }));
        assert_eq!(report.ranked_by, ModelKind::Ols);
        assert!((report.ranked[0].ols_coefficient.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unknown_question_and_non_binary_target() {
        let ds = dataset(&[("a", "y", "y", "x"), ("b", "n", "n", "y"), ("c", "y", "n", "z")]);
        assert!(matches!(
            bias_factor_report(&ds, &[Factor::Question("q7".into())]),
            Err(Error::UnknownQuestion(_))
        ));
        assert!(bias_factor_report(&ds, &[Factor::Question("q1".into())]).is_err());
    }
}
