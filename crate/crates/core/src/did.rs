//! Difference-in-differences estimate of a review-process change.
//!
//! The headline effect is the 2×2 estimator
//! `(treated_post − treated_pre) − (control_post − control_pre)` over
//! era means. The counterfactual series is what the treated group would
//! have looked like had it followed the control group's trend:
//! `treated_pre + (control_t − control_pre)` for every post period `t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::model::Group;
use crate::model::{unit_errors, validate_dataset, ErrorReference, IncompletePolicy, ReviewDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DidObservation {
    pub group: Group,
    pub period: i64,
    pub outcome: f64,
}

/// Outcomes of both groups over periods split at `change_period` (the first
/// post-change period).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidPanel {
    observations: Vec<DidObservation>,
    change_period: i64,
}

impl DidPanel {
    pub fn new(observations: Vec<DidObservation>, change_period: i64) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidPanel("panel has no observations".into()));
        }
        if let Some(o) = observations.iter().find(|o| !o.outcome.is_finite()) {
            return Err(Error::InvalidPanel(format!(
                "non-finite outcome in period {} of the {:?} group",
                o.period, o.group
            )));
        }
        for group in [Group::Treated, Group::Control] {
            for (post, era) in [(false, "pre"), (true, "post")] {
                if !observations
                    .iter()
                    .any(|o| o.group == group && (o.period >= change_period) == post)
                {
                    return Err(Error::InvalidPanel(format!(
                        "{} group has no {era}-change observations",
                        group.as_str()
                    )));
                }
            }
        }
        Ok(Self {
            observations,
            change_period,
        })
    }

    pub fn observations(&self) -> &[DidObservation] {
        &self.observations
    }

    pub fn change_period(&self) -> i64 {
        self.change_period
    }

    /// The same panel with treated and control swapped.
    pub fn swapped(&self) -> Self {
        Self {
            observations: self
                .observations
                .iter()
                .map(|o| DidObservation {
                    group: o.group.other(),
                    ..*o
                })
                .collect(),
            change_period: self.change_period,
        }
    }
}

/// How observations are averaged into an era mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EraWeighting {
    /// Plain mean over raw observations.
    #[default]
    Observation,
    /// Mean of the per-period means.
    PeriodBalanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub period: i64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidResult {
    pub effect: f64,
    pub treated_pre_mean: f64,
    pub treated_post_mean: f64,
    pub control_pre_mean: f64,
    pub control_post_mean: f64,
    pub change_period: i64,
    pub weighting: EraWeighting,
    /// Actual per-period means.
    pub treated_series: Vec<SeriesPoint>,
    pub control_series: Vec<SeriesPoint>,
    /// Hypothetical treated series for post periods with control data.
    pub counterfactual: Vec<SeriesPoint>,
}

pub fn did_estimate(panel: &DidPanel) -> Result<DidResult> {
    did_estimate_with(panel, EraWeighting::Observation)
}

pub fn did_estimate_with(panel: &DidPanel, weighting: EraWeighting) -> Result<DidResult> {
    let mut per_period: BTreeMap<(Group, i64), (f64, usize)> = BTreeMap::new();
    for o in panel.observations() {
        let cell = per_period.entry((o.group, o.period)).or_default();
        cell.0 += o.outcome;
        cell.1 += 1;
    }
    let series = |group: Group| -> Vec<SeriesPoint> {
        per_period
            .iter()
            .filter(|((g, _), _)| *g == group)
            .map(|(&(_, period), &(sum, n))| SeriesPoint {
                period,
                value: sum / n as f64,
            })
            .collect()
    };
    let change = panel.change_period();
    let era_mean = |group: Group, post: bool| -> f64 {
        let in_era = |period: i64| (period >= change) == post;
        match weighting {
            EraWeighting::Observation => {
                let (sum, n) = panel
                    .observations()
                    .iter()
                    .filter(|o| o.group == group && in_era(o.period))
                    .fold((0.0, 0usize), |(s, n), o| (s + o.outcome, n + 1));
                sum / n as f64
            }
            EraWeighting::PeriodBalanced => {
                let points: Vec<f64> = series(group)
                    .into_iter()
                    .filter(|p| in_era(p.period))
                    .map(|p| p.value)
                    .collect();
                points.iter().sum::<f64>() / points.len() as f64
            }
        }
    };

    let treated_pre_mean = era_mean(Group::Treated, false);
    let treated_post_mean = era_mean(Group::Treated, true);
    let control_pre_mean = era_mean(Group::Control, false);
    let control_post_mean = era_mean(Group::Control, true);
    let effect = (treated_post_mean - treated_pre_mean) - (control_post_mean - control_pre_mean);

    let control_series = series(Group::Control);
    let counterfactual = control_series
        .iter()
        .filter(|p| p.period >= change)
        .map(|p| SeriesPoint {
            period: p.period,
            value: treated_pre_mean + (p.value - control_pre_mean),
        })
        .collect();

    Ok(DidResult {
        effect,
        treated_pre_mean,
        treated_post_mean,
        control_pre_mean,
        control_post_mean,
        change_period: change,
        weighting,
        treated_series: series(Group::Treated),
        control_series,
        counterfactual,
    })
}

/// Reviews of one group in one period.
#[derive(Debug, Clone)]
pub struct CohortReviews {
    pub group: Group,
    pub period: i64,
    pub dataset: ReviewDataset,
}

/// Splits a dataset whose records carry `group` and `period` into cohorts.
pub fn cohorts_from_dataset(dataset: &ReviewDataset) -> Result<Vec<CohortReviews>> {
    let mut split: BTreeMap<(Group, i64), Vec<crate::model::ReviewRecord>> = BTreeMap::new();
    for (i, r) in dataset.records().iter().enumerate() {
        let (Some(group), Some(period)) = (r.group, r.period) else {
            return Err(Error::InvalidPanel(format!("record {i} lacks a group or period")));
        };
        split.entry((group, period)).or_default().push(r.clone());
    }
    split
        .into_iter()
        .map(|((group, period), records)| {
            Ok(CohortReviews {
                group,
                period,
                dataset: validate_dataset(records, IncompletePolicy::Drop)?,
            })
        })
        .collect()
}

/// DiD on reviewer misclassification rates.
///
/// Each cohort contributes one observation: the share of its
/// (product, reviewer) pairs whose final classification disagrees with
/// the ground truth.
pub fn did_with_error_rates(
    cohorts: &[CohortReviews],
    ground_truth: &BTreeMap<String, String>,
    change_period: i64,
) -> Result<DidResult> {
    if cohorts.is_empty() {
        return Err(Error::InvalidPanel("no cohorts supplied".into()));
    }
    let reference = ErrorReference::GroundTruth(ground_truth.clone());
    let observations = cohorts
        .iter()
        .map(|c| {
            let errors = unit_errors(&c.dataset, &reference)?;
            let wrong = errors.iter().filter(|(_, e)| *e).count();
            Ok(DidObservation {
                group: c.group,
                period: c.period,
                outcome: wrong as f64 / errors.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    did_estimate(&DidPanel::new(observations, change_period)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_dataset, IncompletePolicy, ReviewRecord};

    fn obs(group: Group, period: i64, outcome: f64) -> DidObservation {
        DidObservation { group, period, outcome }
    }

    fn two_by_two(c0: f64, c1: f64, t0: f64, t1: f64) -> DidPanel {
        DidPanel::new(
            vec![
                obs(Group::Control, 0, c0),
                obs(Group::Control, 1, c1),
                obs(Group::Treated, 0, t0),
                obs(Group::Treated, 1, t1),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn parallel_trends_no_effect() {
        let r = did_estimate(&two_by_two(10.0, 14.0, 20.0, 24.0)).unwrap();
        assert_eq!(r.effect, 0.0);
        assert_eq!(r.counterfactual, vec![SeriesPoint { period: 1, value: 24.0 }]);
    }

    #[test]
    fn arithmetic_effect() {
        let r = did_estimate(&two_by_two(10.0, 14.0, 20.0, 30.0)).unwrap();
        assert_eq!(r.effect, 6.0);
        assert_eq!(r.treated_series.len(), 2);
        let swapped = did_estimate(&two_by_two(10.0, 14.0, 20.0, 30.0).swapped()).unwrap();
        assert_eq!(swapped.effect, -6.0);
    }

    #[test]
    fn level_shift_cancels() {
        let r = did_estimate(&two_by_two(110.0, 114.0, 120.0, 130.0)).unwrap();
        assert_eq!(r.effect, 6.0);
    }

    #[test]
    fn weighting_modes_differ_on_unbalanced_periods() {
        let panel = DidPanel::new(
            vec![
                obs(Group::Control, 0, 0.0),
                obs(Group::Control, 0, 0.0),
                obs(Group::Control, 1, 3.0),
                obs(Group::Control, 2, 1.0),
                obs(Group::Treated, 0, 1.0),
                obs(Group::Treated, 1, 2.0),
                obs(Group::Treated, 2, 2.0),
                obs(Group::Treated, 2, 5.0),
            ],
            1,
        )
        .unwrap();
        let raw = did_estimate(&panel).unwrap();
        let balanced = did_estimate_with(&panel, EraWeighting::PeriodBalanced).unwrap();
        assert_eq!(raw.treated_post_mean, 3.0);
        assert_eq!(balanced.treated_post_mean, 2.75);
        assert_eq!(raw.counterfactual.len(), 2);
    }

    #[test]
    fn invalid_panels() {
        assert!(DidPanel::new(vec![], 1).is_err());
        let missing_control_post = vec![
            obs(Group::Control, 0, 1.0),
            obs(Group::Treated, 0, 1.0),
            obs(Group::Treated, 1, 1.0),
        ];
        assert!(matches!(
            DidPanel::new(missing_control_post, 1),
            Err(Error::InvalidPanel(_))
        ));
    }

    fn cohort(group: Group, period: i64, wrong: usize) -> CohortReviews {
        let records = (0..4)
            .map(|i| {
                let label = if i < wrong { "reject" } else { "approve" };
                ReviewRecord::new(format!("{group:?}{period}-{i}"), "r1", "q1", "a", label)
            })
            .collect();
        CohortReviews {
            group,
            period,
            dataset: validate_dataset(records, IncompletePolicy::Drop).unwrap(),
        }
    }

    #[test]
    fn error_rate_did() {
        let cohorts = vec![
            cohort(Group::Control, 0, 1),
            cohort(Group::Control, 1, 1),
            cohort(Group::Treated, 0, 1),
            cohort(Group::Treated, 1, 3),
        ];
        let truth: BTreeMap<String, String> = cohorts
            .iter()
            .flat_map(|c| {
                c.dataset
                    .products()
                    .into_iter()
                    .map(|p| (p.to_string(), "approve".to_string()))
            })
            .collect();
        let r = did_with_error_rates(&cohorts, &truth, 1).unwrap();
        assert_eq!(r.effect, 0.5);
        assert!(matches!(
            did_with_error_rates(&cohorts, &BTreeMap::new(), 1),
            Err(Error::MissingGroundTruth(_))
        ));
    }
}
