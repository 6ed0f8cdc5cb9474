//! Seeded synthetic review panels with known ground truth.
//!
//! Generation model, per product:
//!
//! 1. Draw a latent true answer per question, uniform over its categories.
//!    The true classification is the weighted vote of those answers
//!    (category 0 votes for the first classification label, any other
//!    category for the second; ties go to the first label).
//! 2. Each reviewer, for each question, keeps the true answer with
//!    probability `1 − difficulty` and otherwise draws a replacement from
//!    their category preference weights (uniform when no bias is given).
//! 3. With probability `anchoring`, reviewer `r > 1` copies the answer of
//!    reviewer `r − 1` instead.
//! 4. The reviewer's final classification is the weighted vote of their
//!    reported answers, flipped with probability `classification_noise`.
//! 5. In a treated post-change cohort, exactly `round(error_rate_delta × N)`
//!    of the N (product, reviewer) units that classified correctly are
//!    switched to the wrong label, so the realized error rate rises by
//!    `error_rate_delta` (capped when too few units are correct).
//!
//! # Random streams
//!
//! Every product owns an independent ChaCha8 stream: the key is
//! `SplitMix64(seed ⊕ SplitMix64(cohort))` expanded by `seed_from_u64`, and
//! the stream id is the product index. Draws per product are fixed in
//! number and order, so output depends only on the config, never on
//! iteration order or platform. The treated-post unit selection uses the
//! same key with stream `u64::MAX`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::did::{CohortReviews, Group};
use crate::error::{Error, Result};
use crate::model::{validate_dataset, IncompletePolicy, ReviewDataset, ReviewRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub id: String,
    pub n_categories: usize,
    /// Probability that a reviewer replaces the true answer with a draw
    /// from their preference weights.
    pub difficulty: f64,
    /// Vote weight of this question in the classification.
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl QuestionSpec {
    pub fn new(id: impl Into<String>, n_categories: usize, difficulty: f64) -> Self {
        Self {
            id: id.into(),
            n_categories,
            difficulty,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Treatment {
    /// First post-change period.
    pub change_period: i64,
    pub error_rate_delta: f64,
}

fn default_labels() -> Vec<String> {
    vec!["approve".into(), "reject".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_products: usize,
    pub n_reviewers: usize,
    pub questions: Vec<QuestionSpec>,
    /// Reviewer id → per-category preference weights. Missing entries
    /// default to 1.
    #[serde(default)]
    pub reviewer_bias: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub anchoring: f64,
    /// Probability that a reviewer's classification flips away from the
    /// vote of their own answers.
    #[serde(default)]
    pub classification_noise: f64,
    #[serde(default)]
    pub treatment: Option<Treatment>,
    /// Teams assigned to products round-robin; empty for no team column.
    #[serde(default)]
    pub teams: Vec<String>,
    #[serde(default = "default_labels")]
    pub classification_labels: Vec<String>,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(n_products: usize, n_reviewers: usize, questions: Vec<QuestionSpec>, seed: u64) -> Self {
        Self {
            n_products,
            n_reviewers,
            questions,
            reviewer_bias: BTreeMap::new(),
            anchoring: 0.0,
            classification_noise: 0.0,
            treatment: None,
            teams: Vec::new(),
            classification_labels: default_labels(),
            seed,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn reviewer_ids(&self) -> Vec<String> {
        let width = digits(self.n_reviewers);
        (1..=self.n_reviewers).map(|i| format!("r{i:0width$}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_products == 0 {
            return bad("n_products must be at least 1".into());
        }
        if self.n_reviewers == 0 {
            return bad("n_reviewers must be at least 1".into());
        }
        if self.questions.is_empty() {
            return bad("at least one question is required".into());
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.anchoring) {
            return bad(format!("anchoring {} is not a probability", self.anchoring));
        }
        if !prob(self.classification_noise) {
            return bad(format!(
                "classification_noise {} is not a probability",
                self.classification_noise
            ));
        }
        for q in &self.questions {
            if q.id.is_empty() {
                return bad("question id must be non-empty".into());
            }
            if q.n_categories < 2 {
                return bad(format!("question `{}` needs at least 2 categories", q.id));
            }
            if !prob(q.difficulty) {
                return bad(format!("difficulty of `{}` is not a probability", q.id));
            }
            if q.weight.is_nan() || q.weight < 0.0 || !q.weight.is_finite() {
                return bad(format!("weight of `{}` must be non-negative", q.id));
            }
        }
        if self
            .questions
            .iter()
            .map(|q| &q.id)
            .collect::<std::collections::BTreeSet<_>>()
            .len()
            != self.questions.len()
        {
            return bad("question ids must be unique".into());
        }
        let reviewers = self.reviewer_ids();
        for (reviewer, weights) in &self.reviewer_bias {
            if !reviewers.contains(reviewer) {
                return bad(format!("bias given for unknown reviewer `{reviewer}`"));
            }
            if weights.iter().any(|w| w.is_nan() || *w < 0.0 || !w.is_finite()) {
                return bad(format!("preference weights of `{reviewer}` must be non-negative"));
            }
            for q in &self.questions {
                if (0..q.n_categories).all(|j| weights.get(j).copied().unwrap_or(1.0) == 0.0) {
                    return bad(format!(
                        "preference weights of `{reviewer}` are all zero on question `{}`",
                        q.id
                    ));
                }
            }
        }
        if let Some(t) = &self.treatment {
            if !prob(t.error_rate_delta) {
                return bad(format!("error_rate_delta {} is not a probability", t.error_rate_delta));
            }
        }
        if self.classification_labels.len() != 2
            || self.classification_labels[0] >= self.classification_labels[1]
            || self.classification_labels[0].is_empty()
        {
            return bad("classification_labels must be two distinct labels in ascending order".into());
        }
        if self.teams.iter().any(String::is_empty) {
            return bad("team names must be non-empty".into());
        }
        Ok(())
    }
}

/// A simulated dataset plus the true classification of every product.
#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    pub dataset: ReviewDataset,
    pub ground_truth: BTreeMap<String, String>,
}

fn digits(n: usize) -> usize {
    n.max(1).to_string().len()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn product_rng(seed: u64, cohort: u64, product: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(cohort)));
    rng.set_stream(product);
    rng
}

fn cohort_tag(group: Group, period: i64) -> u64 {
    let g = match group {
        Group::Treated => 1u64,
        Group::Control => 2u64,
    };
    splitmix64(g) ^ (period as u64).wrapping_mul(0x2545_f491_4f6c_dd1d)
}

struct Cohort<'a> {
    tag: u64,
    prefix: String,
    n_products: usize,
    period: Option<i64>,
    group: Option<Group>,
    forced_error: f64,
    anchoring: f64,
    config: &'a SimulationConfig,
}

fn vote(config: &SimulationConfig, answers: &[usize]) -> usize {
    let (mut first, mut second) = (0.0, 0.0);
    for (q, &a) in config.questions.iter().zip(answers) {
        if a == 0 {
            first += q.weight;
        } else {
            second += q.weight;
        }
    }
    usize::from(second > first)
}

fn weighted_draw(u: f64, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = u * total;
    for (j, &w) in weights.iter().enumerate() {
        if target < w {
            return j;
        }
        target -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn generate(cohort: &Cohort<'_>) -> Result<SimulatedPanel> {
    let config = cohort.config;
    let reviewers = config.reviewer_ids();
    let width = digits(cohort.n_products);
    let labels = &config.classification_labels;
    let categories: Vec<Vec<String>> = config
        .questions
        .iter()
        .map(|q| {
            let w = digits(q.n_categories - 1);
            (0..q.n_categories).map(|j| format!("c{j:0w$}")).collect()
        })
        .collect();
    let preferences: Vec<Vec<Vec<f64>>> = reviewers
        .iter()
        .map(|r| {
            config
                .questions
                .iter()
                .map(|q| {
                    let given = config.reviewer_bias.get(r);
                    (0..q.n_categories)
                        .map(|j| given.and_then(|w| w.get(j).copied()).unwrap_or(1.0))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut records = Vec::with_capacity(cohort.n_products * reviewers.len() * config.questions.len());
    let mut ground_truth = BTreeMap::new();
    // (classification, true classification) per unit, in record order
    let mut units: Vec<(usize, usize)> = Vec::with_capacity(cohort.n_products * reviewers.len());
    for p in 0..cohort.n_products {
        let mut rng = product_rng(config.seed, cohort.tag, p as u64);
        let product = format!("{}p{:0width$}", cohort.prefix, p + 1);
        let truth: Vec<usize> = config
            .questions
            .iter()
            .map(|q| rng.random_range(0..q.n_categories))
            .collect();
        let true_class = vote(config, &truth);
        ground_truth.insert(product.clone(), labels[true_class].clone());
        let team = (!config.teams.is_empty()).then(|| config.teams[p % config.teams.len()].clone());

        let mut previous: Vec<usize> = Vec::new();
        for (r, reviewer) in reviewers.iter().enumerate() {
            let mut answers = Vec::with_capacity(config.questions.len());
            for (qi, q) in config.questions.iter().enumerate() {
                let noisy: f64 = rng.random();
                let replacement = weighted_draw(rng.random(), &preferences[r][qi]);
                let copy: f64 = rng.random();
                let own = if noisy < q.difficulty { replacement } else { truth[qi] };
                answers.push(if r > 0 && copy < cohort.anchoring {
                    previous[qi]
                } else {
                    own
                });
            }
            let mut class = vote(config, &answers);
            let flip: f64 = rng.random();
            if flip < config.classification_noise {
                class = 1 - class;
            }
            units.push((class, true_class));
            for (qi, q) in config.questions.iter().enumerate() {
                records.push(ReviewRecord {
                    product_id: product.clone(),
                    reviewer_id: reviewer.clone(),
                    question_id: q.id.clone(),
                    answer: categories[qi][answers[qi]].clone(),
                    final_classification: labels[class].clone(),
                    team: team.clone(),
                    period: cohort.period,
                    group: cohort.group,
                });
            }
            previous = answers;
        }
    }
    if cohort.forced_error > 0.0 {
        let correct: Vec<usize> = (0..units.len()).filter(|&u| units[u].0 == units[u].1).collect();
        let wanted = (cohort.forced_error * units.len() as f64).round() as usize;
        let mut rng = product_rng(config.seed, cohort.tag, u64::MAX);
        let n_questions = config.questions.len();
        for i in rand::seq::index::sample(&mut rng, correct.len(), wanted.min(correct.len())) {
            let unit = correct[i];
            let wrong = &labels[1 - units[unit].1];
            for record in &mut records[unit * n_questions..(unit + 1) * n_questions] {
                record.final_classification = wrong.clone();
            }
        }
    }
    Ok(SimulatedPanel {
        dataset: validate_dataset(records, IncompletePolicy::Drop)?,
        ground_truth,
    })
}

/// Generates one review panel from `config`. No treatment is applied.
pub fn simulate_panel(config: &SimulationConfig) -> Result<SimulatedPanel> {
    config.validate()?;
    generate(&Cohort {
        tag: 0,
        prefix: String::new(),
        n_products: config.n_products,
        period: None,
        group: None,
        forced_error: 0.0,
        anchoring: config.anchoring,
        config,
    })
}

/// Layout of a simulated before/after comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewChangeDesign {
    /// Products per control cohort; treated cohorts use `n_products`.
    pub control_products: usize,
    pub periods: Vec<i64>,
    /// Anchoring of the control group; defaults to the config value.
    #[serde(default)]
    pub control_anchoring: Option<f64>,
}

impl ReviewChangeDesign {
    /// One pre period (`change − 1`) and one post period (`change`).
    pub fn two_period(control_products: usize, change_period: i64) -> Self {
        Self {
            control_products,
            periods: vec![change_period - 1, change_period],
            control_anchoring: None,
        }
    }
}

/// Treated and control cohorts for every period, ready for
/// [`did_with_error_rates`](crate::did::did_with_error_rates).
#[derive(Debug, Clone)]
pub struct ReviewChangePanel {
    pub cohorts: Vec<CohortReviews>,
    pub ground_truth: BTreeMap<String, String>,
    pub change_period: i64,
}

pub fn inject_review_change(config: &SimulationConfig, design: &ReviewChangeDesign) -> Result<ReviewChangePanel> {
    config.validate()?;
    let treatment = config
        .treatment
        .ok_or_else(|| Error::InvalidConfig("a treatment block is required".into()))?;
    if design.control_products == 0 {
        return Err(Error::InvalidConfig("control_products must be at least 1".into()));
    }
    let change = treatment.change_period;
    if !design.periods.iter().any(|&p| p < change) || !design.periods.iter().any(|&p| p >= change) {
        return Err(Error::InvalidConfig(format!(
            "periods must include both pre- and post-change periods around {change}"
        )));
    }
    let control_anchoring = design.control_anchoring.unwrap_or(config.anchoring);
    if !(0.0..=1.0).contains(&control_anchoring) {
        return Err(Error::InvalidConfig("control_anchoring is not a probability".into()));
    }

    let mut periods = design.periods.clone();
    periods.sort_unstable();
    periods.dedup();
    let mut cohorts = Vec::new();
    let mut ground_truth = BTreeMap::new();
    for group in [Group::Control, Group::Treated] {
        for &period in &periods {
            let treated = group == Group::Treated;
            let panel = generate(&Cohort {
                tag: cohort_tag(group, period),
                prefix: format!("{}{period}-", if treated { "t" } else { "c" }),
                n_products: if treated {
                    config.n_products
                } else {
                    design.control_products
                },
                period: Some(period),
                group: Some(group),
                forced_error: if treated && period >= change {
                    treatment.error_rate_delta
                } else {
                    0.0
                },
                anchoring: if treated { config.anchoring } else { control_anchoring },
                config,
            })?;
            ground_truth.extend(panel.ground_truth);
            cohorts.push(CohortReviews {
                group,
                period,
                dataset: panel.dataset,
            });
        }
    }
    Ok(ReviewChangePanel {
        cohorts,
        ground_truth,
        change_period: change,
    })
}
