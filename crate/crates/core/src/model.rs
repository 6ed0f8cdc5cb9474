//! Domain types for multi-reviewer rubric datasets.
//!
//! A dataset is a long-format panel: one [`ReviewRecord`] per
//! (product, reviewer, question). Validation canonicalises the panel and
//! derives the structures every analysis consumes: per-question
//! [`RatingMatrix`] values for Fleiss Kappa, answer × classification
//! [`ContingencyTable`] values for the chi-square test, and per
//! (product, reviewer) [`ReviewUnit`] values for error-rate work.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One answer given by one reviewer to one rubric question about one product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub product_id: String,
    pub reviewer_id: String,
    pub question_id: String,
    pub answer: String,
    pub final_classification: String,
    #[serde(default)]
    pub team: Option<String>,
    #[serde(default)]
    pub period: Option<i64>,
    /// Difference-in-differences arm, when the panel carries one.
    #[serde(default)]
    pub group: Option<Group>,
}

/// Arm of a before/after comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Treated,
    Control,
}

impl Group {
    pub fn other(self) -> Self {
        match self {
            Group::Treated => Group::Control,
            Group::Control => Group::Treated,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Treated => "treated",
            Group::Control => "control",
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "treated" | "treatment" => Ok(Group::Treated),
            "control" => Ok(Group::Control),
            other => Err(Error::InvalidPanel(format!("unknown group `{other}`"))),
        }
    }
}

impl ReviewRecord {
    pub fn new(
        product_id: impl Into<String>,
        reviewer_id: impl Into<String>,
        question_id: impl Into<String>,
        answer: impl Into<String>,
        final_classification: impl Into<String>,
    ) -> Self {
        Self {
            product_id: product_id.into(),
            reviewer_id: reviewer_id.into(),
            question_id: question_id.into(),
            answer: answer.into(),
            final_classification: final_classification.into(),
            team: None,
            period: None,
            group: None,
        }
    }

    pub fn with_team(mut self, team: impl Into<String>) -> Self {
        self.team = Some(team.into());
        self
    }

    pub fn with_period(mut self, period: i64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = Some(group);
        self
    }

    fn sort_key(&self) -> (&str, &str, &str) {
        (&self.product_id, &self.reviewer_id, &self.question_id)
    }
}

/// What to do with a (product, question) cell that lacks the full rater count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncompletePolicy {
    #[default]
    Drop,
    Strict,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationOptions {
    pub policy: IncompletePolicy,
    /// Fixed raters per cell. Inferred as the largest observed cell when absent.
    pub raters_per_cell: Option<usize>,
    /// Per-question category lists that replace the observed label set (order kept).
    pub declared_categories: BTreeMap<String, Vec<String>>,
}

impl ValidationOptions {
    pub fn with_policy(policy: IncompletePolicy) -> Self {
        Self {
            policy,
            ..Self::default()
        }
    }
}

/// Audit trail of what validation kept and dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub input_records: usize,
    pub kept_records: usize,
    pub dropped_cells: usize,
    pub dropped_records: usize,
    pub raters_per_cell: usize,
}

/// A validated, canonically ordered review panel.
///
/// Records are sorted by (product, reviewer, question). Every retained
/// (product, question) cell carries exactly `raters_per_cell` ratings.
#[derive(Debug, Clone)]
pub struct ReviewDataset {
    records: Vec<ReviewRecord>,
    reviewers: Vec<String>,
    questions: Vec<String>,
    categories: BTreeMap<String, Vec<String>>,
    raters_per_cell: usize,
    summary: ValidationSummary,
    // question -> product -> record indices
    cells: BTreeMap<String, BTreeMap<String, Vec<usize>>>,
}

/// Validates with the given incomplete-cell policy and default options.
pub fn validate_dataset(records: Vec<ReviewRecord>, policy: IncompletePolicy) -> Result<ReviewDataset> {
    validate_dataset_with(records, &ValidationOptions::with_policy(policy))
}

pub fn validate_dataset_with(mut records: Vec<ReviewRecord>, options: &ValidationOptions) -> Result<ReviewDataset> {
    if records.is_empty() {
        return Err(Error::Empty("dataset has no records".into()));
    }
    for (index, r) in records.iter().enumerate() {
        for (field, value) in [
            ("product_id", &r.product_id),
            ("reviewer_id", &r.reviewer_id),
            ("question_id", &r.question_id),
            ("answer", &r.answer),
            ("final_classification", &r.final_classification),
        ] {
            if value.is_empty() {
                return Err(Error::EmptyIdentifier { field, index });
            }
        }
        if matches!(&r.team, Some(t) if t.is_empty()) {
            return Err(Error::EmptyIdentifier { field: "team", index });
        }
    }

    if !records.is_sorted_by(|a, b| a.sort_key() <= b.sort_key()) {
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }
    if let Some(w) = records.windows(2).find(|w| w[0].sort_key() == w[1].sort_key()) {
        return Err(Error::DuplicateRating {
            product: w[0].product_id.clone(),
            reviewer: w[0].reviewer_id.clone(),
            question: w[0].question_id.clone(),
        });
    }

    for (question, declared) in &options.declared_categories {
        if let Some(r) = records
            .iter()
            .find(|r| &r.question_id == question && !declared.contains(&r.answer))
        {
            return Err(Error::UndeclaredCategory {
                question: question.clone(),
                answer: r.answer.clone(),
            });
        }
    }

    let input_records = records.len();
    let reviewers: Vec<String> = records
        .iter()
        .map(|r| r.reviewer_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let questions: Vec<String> = records
        .iter()
        .map(|r| r.question_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();

    // records are sorted by product, so cells are counted one product block at a time
    let mut cell_sizes: Vec<(&str, &str, usize)> = Vec::new();
    for block in records.chunk_by(|a, b| a.product_id == b.product_id) {
        let mut per_question: BTreeMap<&str, usize> = BTreeMap::new();
        for r in block {
            *per_question.entry(&r.question_id).or_default() += 1;
        }
        let product = block[0].product_id.as_str();
        cell_sizes.extend(per_question.into_iter().map(|(q, n)| (product, q, n)));
    }
    let raters = options
        .raters_per_cell
        .unwrap_or_else(|| cell_sizes.iter().map(|c| c.2).max().unwrap_or(0));

    if options.policy == IncompletePolicy::Strict {
        if let Some(&(product, question, found)) = cell_sizes.iter().find(|c| c.2 != raters) {
            return Err(Error::IncompleteCell {
                product: product.to_string(),
                question: question.to_string(),
                found,
                expected: raters,
            });
        }
    }
    let incomplete: BTreeSet<(String, String)> = cell_sizes
        .iter()
        .filter(|c| c.2 != raters)
        .map(|&(p, q, _)| (p.to_string(), q.to_string()))
        .collect();

    let dropped_cells = incomplete.len();
    if dropped_cells > 0 {
        records.retain(|r| !incomplete.contains(&(r.product_id.clone(), r.question_id.clone())));
    }
    let kept_records = records.len();

    let mut observed: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &records {
        observed.entry(&r.question_id).or_default().insert(&r.answer);
    }
    let mut categories: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for question in &questions {
        let labels = match options.declared_categories.get(question) {
            Some(declared) => declared.clone(),
            None => observed
                .get(question.as_str())
                .map(|set| set.iter().map(|a| a.to_string()).collect())
                .unwrap_or_default(),
        };
        categories.insert(question.clone(), labels);
    }

    let mut by_question: BTreeMap<&str, Vec<(String, Vec<usize>)>> = BTreeMap::new();
    let mut offset = 0;
    for block in records.chunk_by(|a, b| a.product_id == b.product_id) {
        let mut per_question: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in block.iter().enumerate() {
            per_question.entry(&r.question_id).or_default().push(offset + i);
        }
        for (q, idx) in per_question {
            by_question
                .entry(q)
                .or_default()
                .push((block[0].product_id.clone(), idx));
        }
        offset += block.len();
    }
    let cells: BTreeMap<String, BTreeMap<String, Vec<usize>>> = by_question
        .into_iter()
        .map(|(q, products)| (q.to_string(), products.into_iter().collect()))
        .collect();

    Ok(ReviewDataset {
        summary: ValidationSummary {
            input_records,
            kept_records,
            dropped_cells,
            dropped_records: input_records - kept_records,
            raters_per_cell: raters,
        },
        records,
        reviewers,
        questions,
        categories,
        raters_per_cell: raters,
        cells,
    })
}

impl ReviewDataset {
    pub fn records(&self) -> &[ReviewRecord] {
        &self.records
    }

    pub fn reviewers(&self) -> &[String] {
        &self.reviewers
    }

    pub fn questions(&self) -> &[String] {
        &self.questions
    }

    pub fn categories(&self, question: &str) -> Option<&[String]> {
        self.categories.get(question).map(Vec::as_slice)
    }

    pub fn raters_per_cell(&self) -> usize {
        self.raters_per_cell
    }

    pub fn summary(&self) -> &ValidationSummary {
        &self.summary
    }

    /// Distinct products with at least one retained record.
    pub fn products(&self) -> Vec<&str> {
        let mut products: Vec<&str> = self.records.iter().map(|r| r.product_id.as_str()).collect();
        products.dedup();
        products
    }

    /// Number of complete (product, question) cells retained for a question.
    pub fn subject_count(&self, question: &str) -> usize {
        self.cells.get(question).map_or(0, BTreeMap::len)
    }

    /// Retained cells of a question, keyed by product, in product order.
    pub(crate) fn question_cells(&self, question: &str) -> Option<&BTreeMap<String, Vec<usize>>> {
        self.cells.get(question)
    }

    /// Union of answer labels over all questions, lexicographically ordered.
    pub fn union_categories(&self) -> Vec<String> {
        self.categories
            .values()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// One entry per (product, reviewer) pair, in canonical order.
    ///
    /// The classification and team are taken from the pair's first record
    /// (lowest question id).
    pub fn review_units(&self) -> Vec<ReviewUnit> {
        let mut units: Vec<ReviewUnit> = Vec::new();
        for r in &self.records {
            match units.last() {
                Some(u) if u.product_id == r.product_id && u.reviewer_id == r.reviewer_id => {}
                _ => units.push(ReviewUnit {
                    product_id: r.product_id.clone(),
                    reviewer_id: r.reviewer_id.clone(),
                    classification: r.final_classification.clone(),
                    team: r.team.clone(),
                    period: r.period,
                }),
            }
        }
        units
    }

    /// Majority classification per product over its reviewers; ties go to
    /// the lexicographically smallest label.
    pub fn consensus_classifications(&self) -> BTreeMap<String, String> {
        let mut votes: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for u in self.review_units() {
            *votes
                .entry(u.product_id)
                .or_default()
                .entry(u.classification)
                .or_default() += 1;
        }
        votes
            .into_iter()
            .map(|(product, tally)| {
                let best = tally.values().copied().max().unwrap_or(0);
                let label = tally
                    .into_iter()
                    .find(|(_, n)| *n == best)
                    .map(|(l, _)| l)
                    .unwrap_or_default();
                (product, label)
            })
            .collect()
    }
}

/// A (product, reviewer) pair with the reviewer's final classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewUnit {
    pub product_id: String,
    pub reviewer_id: String,
    pub classification: String,
    pub team: Option<String>,
    pub period: Option<i64>,
}

/// Reference used to decide whether a reviewer's classification is an error.
#[derive(Debug, Clone)]
pub enum ErrorReference {
    GroundTruth(BTreeMap<String, String>),
    /// Per-product majority classification of the reviewers themselves.
    Consensus,
}

/// Pairs every review unit with a 0/1 error indicator against `reference`.
pub fn unit_errors(dataset: &ReviewDataset, reference: &ErrorReference) -> Result<Vec<(ReviewUnit, bool)>> {
    let consensus;
    let truth = match reference {
        ErrorReference::GroundTruth(map) => map,
        ErrorReference::Consensus => {
            consensus = dataset.consensus_classifications();
            &consensus
        }
    };
    dataset
        .review_units()
        .into_iter()
        .map(|u| {
            let expected = truth
                .get(&u.product_id)
                .ok_or_else(|| Error::MissingGroundTruth(u.product_id.clone()))?;
            let wrong = *expected != u.classification;
            Ok((u, wrong))
        })
        .collect()
}

/// Per-subject category counts for one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingMatrix {
    counts: Vec<Vec<u32>>,
    raters: u32,
    categories: Vec<String>,
}

impl RatingMatrix {
    /// Builds a matrix with generic category names.
    pub fn new(counts: Vec<Vec<u32>>, raters: u32) -> Result<Self> {
        let k = counts.first().map_or(0, Vec::len);
        let categories = (0..k).map(|j| j.to_string()).collect();
        Self::with_categories(counts, raters, categories)
    }

    pub fn with_categories(counts: Vec<Vec<u32>>, raters: u32, categories: Vec<String>) -> Result<Self> {
        if raters < 2 {
            return Err(Error::TooFewRaters(raters as usize));
        }
        if counts.is_empty() {
            return Err(Error::Empty("rating matrix has no subjects".into()));
        }
        if categories.len() < 2 {
            return Err(Error::InvalidMatrix(format!(
                "need at least 2 categories, found {}",
                categories.len()
            )));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != categories.len() {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} columns, expected {}",
                    row.len(),
                    categories.len()
                )));
            }
            let total: u32 = row.iter().sum();
            if total != raters {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} sums to {total}, expected {raters}"
                )));
            }
        }
        Ok(Self {
            counts,
            raters,
            categories,
        })
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn n_subjects(&self) -> usize {
        self.counts.len()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn total_ratings(&self) -> u64 {
        self.counts.iter().flatten().map(|&c| c as u64).sum()
    }
}

/// Rating matrix of one question: one row per complete product.
pub fn rating_matrix(dataset: &ReviewDataset, question: &str) -> Result<RatingMatrix> {
    let categories = dataset
        .categories(question)
        .ok_or_else(|| Error::UnknownQuestion(question.to_string()))?;
    let raters = dataset.raters_per_cell();
    if raters < 2 {
        return Err(Error::TooFewRaters(raters));
    }
    let cells = dataset
        .question_cells(question)
        .filter(|c| !c.is_empty())
        .ok_or_else(|| Error::Empty(format!("question `{question}` has no complete cells")))?;
    if categories.len() < 2 {
        return Err(Error::KappaUndefined);
    }
    let index: BTreeMap<&str, usize> = categories.iter().enumerate().map(|(j, c)| (c.as_str(), j)).collect();
    let counts = cells
        .values()
        .map(|idx| {
            let mut row = vec![0u32; categories.len()];
            for &i in idx {
                row[index[dataset.records()[i].answer.as_str()]] += 1;
            }
            row
        })
        .collect();
    RatingMatrix::with_categories(counts, raters as u32, categories.to_vec())
}

/// Pooled rating matrix: every (product, question) cell is a subject over
/// the union category space.
pub fn pooled_rating_matrix(dataset: &ReviewDataset) -> Result<RatingMatrix> {
    let raters = dataset.raters_per_cell();
    if raters < 2 {
        return Err(Error::TooFewRaters(raters));
    }
    let categories = dataset.union_categories();
    let index: BTreeMap<&str, usize> = categories.iter().enumerate().map(|(j, c)| (c.as_str(), j)).collect();
    let mut counts = Vec::new();
    for question in dataset.questions() {
        let Some(cells) = dataset.question_cells(question) else {
            continue;
        };
        for idx in cells.values() {
            let mut row = vec![0u32; categories.len()];
            for &i in idx {
                row[index[dataset.records()[i].answer.as_str()]] += 1;
            }
            counts.push(row);
        }
    }
    if counts.is_empty() {
        return Err(Error::Empty("dataset has no complete cells".into()));
    }
    if categories.len() < 2 {
        return Err(Error::KappaUndefined);
    }
    RatingMatrix::with_categories(counts, raters as u32, categories)
}

/// Observed and expected counts of answer × final classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub observed: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
}

impl ContingencyTable {
    /// Builds a table and its independence-model expected counts.
    ///
    /// Fails when there are fewer than two rows or columns, or any margin is zero.
    pub fn new(observed: Vec<Vec<u64>>, row_labels: Vec<String>, column_labels: Vec<String>) -> Result<Self> {
        let rows = observed.len();
        let cols = observed.first().map_or(0, Vec::len);
        if observed.iter().any(|r| r.len() != cols) {
            return Err(Error::DegenerateTable("ragged rows".into()));
        }
        if row_labels.len() != rows || column_labels.len() != cols {
            return Err(Error::DegenerateTable("label count does not match table shape".into()));
        }
        if rows < 2 || cols < 2 {
            return Err(Error::DegenerateTable(format!(
                "shape {rows}x{cols}, need at least 2x2"
            )));
        }
        let row_totals: Vec<u64> = observed.iter().map(|r| r.iter().sum()).collect();
        let col_totals: Vec<u64> = (0..cols).map(|c| observed.iter().map(|r| r[c]).sum()).collect();
        if let Some(r) = row_totals.iter().position(|&t| t == 0) {
            return Err(Error::DegenerateTable(format!(
                "row `{}` has zero margin",
                row_labels[r]
            )));
        }
        if let Some(c) = col_totals.iter().position(|&t| t == 0) {
            return Err(Error::DegenerateTable(format!(
                "column `{}` has zero margin",
                column_labels[c]
            )));
        }
        let grand = row_totals.iter().sum::<u64>() as f64;
        let expected = row_totals
            .iter()
            .map(|&rt| col_totals.iter().map(|&ct| rt as f64 * ct as f64 / grand).collect())
            .collect();
        Ok(Self {
            observed,
            expected,
            row_labels,
            column_labels,
        })
    }

    /// Convenience constructor with generic labels.
    pub fn from_counts(observed: Vec<Vec<u64>>) -> Result<Self> {
        let rows = observed.len();
        let cols = observed.first().map_or(0, Vec::len);
        Self::new(
            observed,
            (0..rows).map(|r| format!("r{r}")).collect(),
            (0..cols).map(|c| format!("c{c}")).collect(),
        )
    }

    pub fn grand_total(&self) -> u64 {
        self.observed.iter().flatten().sum()
    }
}

/// Cross-tabulates a question's answers against the reviewers' final classifications.
pub fn contingency_from(dataset: &ReviewDataset, question: &str) -> Result<ContingencyTable> {
    let rows = dataset
        .categories(question)
        .ok_or_else(|| Error::UnknownQuestion(question.to_string()))?
        .to_vec();
    let records: Vec<&ReviewRecord> = dataset.records().iter().filter(|r| r.question_id == question).collect();
    let cols: Vec<String> = records
        .iter()
        .map(|r| r.final_classification.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut observed = vec![vec![0u64; cols.len()]; rows.len()];
    for r in records {
        let i = rows
            .iter()
            .position(|l| *l == r.answer)
            .expect("answer in category space");
        let j = cols
            .iter()
            .position(|l| *l == r.final_classification)
            .expect("classification observed");
        observed[i][j] += 1;
    }
    ContingencyTable::new(observed, rows, cols)
}
