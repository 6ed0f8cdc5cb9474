//! Reviewer consistency: complete-consensus agreement rate and Fleiss Kappa.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pooled_rating_matrix, rating_matrix, RatingMatrix, ReviewDataset};

/// Fleiss Kappa together with the quantities it is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    /// Mean per-subject observed agreement.
    pub p_bar: f64,
    /// Chance agreement from the marginal category proportions.
    pub p_e_bar: f64,
    pub n_subjects: usize,
    pub n_raters: usize,
    pub n_categories: usize,
}

/// Fleiss Kappa of a rating matrix.
///
/// `P_i = Σ_j n_ij (n_ij − 1) / (n (n − 1))`, `p̄` is the mean of `P_i`,
/// `p_j` is the share of all ratings in category `j`, `p̄_e = Σ_j p_j²`
/// and `κ = (p̄ − p̄_e) / (1 − p̄_e)`.
pub fn fleiss_kappa(matrix: &RatingMatrix) -> Result<KappaResult> {
    let n = matrix.raters() as f64;
    if matrix.raters() < 2 {
        return Err(Error::TooFewRaters(matrix.raters() as usize));
    }
    let subjects = matrix.n_subjects();
    let k = matrix.n_categories();

    let mut column_totals = vec![0u64; k];
    let mut agreement_sum = 0.0;
    for row in matrix.counts() {
        let pairs: u64 = row.iter().map(|&c| c as u64 * (c as u64).saturating_sub(1)).sum();
        agreement_sum += pairs as f64 / (n * (n - 1.0));
        for (total, &c) in column_totals.iter_mut().zip(row) {
            *total += c as u64;
        }
    }
    if column_totals.iter().filter(|&&t| t > 0).count() < 2 {
        return Err(Error::KappaUndefined);
    }
    let grand = subjects as f64 * n;
    let p_bar = agreement_sum / subjects as f64;
    let p_e_bar: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / grand;
            p * p
        })
        .sum();
    Ok(KappaResult {
        kappa: (p_bar - p_e_bar) / (1.0 - p_e_bar),
        p_bar,
        p_e_bar,
        n_subjects: subjects,
        n_raters: matrix.raters() as usize,
        n_categories: k,
    })
}

/// Fraction of products on which every reviewer gave identical answers to
/// every question. Only products complete on all questions are counted.
pub fn agreement_rate(dataset: &ReviewDataset) -> Result<f64> {
    let questions = dataset.questions();
    let mut cells_per_product: BTreeMap<&str, (usize, bool)> = BTreeMap::new();
    for question in questions {
        let Some(cells) = dataset.question_cells(question) else {
            continue;
        };
        for (product, idx) in cells {
            let first = &dataset.records()[idx[0]].answer;
            let unanimous = idx.iter().all(|&i| &dataset.records()[i].answer == first);
            let entry = cells_per_product.entry(product.as_str()).or_insert((0, true));
            entry.0 += 1;
            entry.1 &= unanimous;
        }
    }
    let complete: Vec<bool> = cells_per_product
        .values()
        .filter(|(n, _)| *n == questions.len())
        .map(|&(_, unanimous)| unanimous)
        .collect();
    if complete.is_empty() {
        return Err(Error::Empty("no product is complete on every question".into()));
    }
    Ok(complete.iter().filter(|&&u| u).count() as f64 / complete.len() as f64)
}

/// How the overall kappa aggregates questions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverallKappaMode {
    /// Every (product, question) cell is a subject over the union category space.
    #[default]
    Pooled,
    /// Unweighted mean of the computable per-question kappas.
    MeanOfQuestions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallKappa {
    pub mode: OverallKappaMode,
    pub kappa: f64,
    /// Full decomposition, present in pooled mode.
    pub pooled: Option<KappaResult>,
    pub questions_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub per_question_kappa: BTreeMap<String, KappaResult>,
    /// Questions whose kappa could not be computed, with the reason.
    pub per_question_errors: BTreeMap<String, String>,
    pub overall_kappa: OverallKappa,
    /// Complete-consensus fraction; absent when no product is complete.
    pub agreement_rate: Option<f64>,
    /// All questions, lowest kappa (most disagreement) first. Ties break on
    /// question id; questions without a kappa come last.
    pub disagreement_ranking: Vec<String>,
}

pub fn analyze_agreement(dataset: &ReviewDataset, mode: OverallKappaMode) -> Result<AgreementReport> {
    let mut per_question = BTreeMap::new();
    let mut errors = BTreeMap::new();
    for question in dataset.questions() {
        match rating_matrix(dataset, question).and_then(|m| fleiss_kappa(&m)) {
            Ok(k) => {
                per_question.insert(question.clone(), k);
            }
            Err(e) => {
                errors.insert(question.clone(), e.to_string());
            }
        }
    }
    if per_question.is_empty() {
        return Err(Error::Empty("no question has a computable kappa".into()));
    }

    let overall = match mode {
        OverallKappaMode::Pooled => {
            let pooled = fleiss_kappa(&pooled_rating_matrix(dataset)?)?;
            OverallKappa {
                mode,
                kappa: pooled.kappa,
                pooled: Some(pooled),
                questions_used: per_question.len(),
            }
        }
        OverallKappaMode::MeanOfQuestions => OverallKappa {
            mode,
            kappa: per_question.values().map(|k| k.kappa).sum::<f64>() / per_question.len() as f64,
            pooled: None,
            questions_used: per_question.len(),
        },
    };

    let mut ranked: Vec<(&String, f64)> = per_question.iter().map(|(q, k)| (q, k.kappa)).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let disagreement_ranking = ranked
        .into_iter()
        .map(|(q, _)| q.clone())
        .chain(errors.keys().cloned())
        .collect();

    Ok(AgreementReport {
        agreement_rate: agreement_rate(dataset).ok(),
        per_question_kappa: per_question,
        per_question_errors: errors,
        overall_kappa: overall,
        disagreement_ranking,
    })
}
