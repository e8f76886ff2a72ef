//! Rank-based quantities: average ranks, ROC AUC and the step-integral AUPRC.

use crate::error::{EvalError, Result};
use crate::vectors::BinaryVector;

fn sorted_order(x: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    if descending {
        idx.sort_by(|&i, &j| x[j].total_cmp(&x[i]).then(i.cmp(&j)));
    } else {
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)));
    }
    idx
}

/// 1-based ranks, smallest value first; tied values share the mean of their
/// positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let order = sorted_order(x, false);
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

fn check_pair(labels: &BinaryVector, scores: &[f64]) -> Result<()> {
    if labels.len() != scores.len() {
        return Err(EvalError::LengthMismatch {
            left: labels.len(),
            right: scores.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::EmptyVector);
    }
    if let Some(index) = scores.iter().position(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite { index });
    }
    Ok(())
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half.
///
/// Computed from the Mann-Whitney rank sum, which counts every tied
/// (negative, positive) pair exactly once with weight 0.5.
pub fn auc(labels: &BinaryVector, scores: &[f64]) -> Result<f64> {
    check_pair(labels, scores)?;
    let pos = labels.popcount();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::DegenerateConfusion);
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = labels
        .bits()
        .iter()
        .zip(&ranks)
        .filter(|(b, _)| **b)
        .map(|(_, r)| r)
        .sum();
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Area under the precision-recall curve as a step integral.
///
/// Thresholds are the distinct prediction values in decreasing order; at each
/// threshold `tau` the inputs with prediction `>= tau` are called positive and
/// the area grows by `(R_i - R_{i-1}) * P_i`, starting from `R_0 = 0`.
pub fn auprc_curve(labels: &BinaryVector, predictions: &[f64]) -> Result<f64> {
    check_pair(labels, predictions)?;
    let positives = labels.popcount();
    if positives == 0 {
        return Err(EvalError::AuprcUndefined);
    }
    let order = sorted_order(predictions, true);
    let bits = labels.bits();
    let total = positives as f64;
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    let mut tp = 0usize;
    let mut start = 0;
    while start < order.len() {
        let value = predictions[order[start]];
        let mut end = start;
        while end < order.len() && predictions[order[end]] == value {
            if bits[order[end]] {
                tp += 1;
            }
            end += 1;
        }
        let recall = tp as f64 / total;
        let precision = tp as f64 / end as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        start = end;
    }
    Ok(area)
}
