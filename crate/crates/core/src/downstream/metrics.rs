use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub f_measure: f64,
}

pub fn selection_metrics(selected: &[usize], truth: &[usize], p: usize) -> Result<SelectionMetrics> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("truth set is empty".into()));
    }
    if let Some(&i) = selected.iter().chain(truth).find(|&&i| i >= p) {
        return Err(Error::IndexOutOfRange { index: i, bound: p });
    }
    let sel: BTreeSet<usize> = selected.iter().copied().collect();
    let tru: BTreeSet<usize> = truth.iter().copied().collect();
    let hits = sel.intersection(&tru).count() as f64;
    let false_pos = sel.len() as f64 - hits;
    let tpr = hits / tru.len() as f64;
    let negatives = p - tru.len();
    let fpr = if negatives == 0 { 0.0 } else { false_pos / negatives as f64 };
    let precision = if sel.is_empty() { 0.0 } else { hits / sel.len() as f64 };
    let f_measure = if precision + tpr == 0.0 { 0.0 } else { 2.0 * precision * tpr / (precision + tpr) };
    Ok(SelectionMetrics { tpr, fpr, precision, f_measure })
}

pub fn error_rate(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidArgument(format!("{} predictions for {} labels", predicted.len(), actual.len())));
    }
    if actual.is_empty() {
        return Err(Error::InvalidArgument("no labels to compare".into()));
    }
    let wrong = predicted.iter().zip(actual).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / actual.len() as f64)
}

/// Area under the ROC curve of `scores` against binary `positive` labels,
/// with tied scores counted as half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("ROC AUC needs both classes".into()));
    }
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid_rank * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}
