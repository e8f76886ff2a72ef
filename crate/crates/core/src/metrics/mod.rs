//! Similarity metrics between an activation vector and a concept vector.
//!
//! Binary metrics binarize the activation with [`top_alpha`] and the concept
//! with [`round_half`](crate::vectors::round_half); the continuous metrics use
//! the raw vectors where their definition does. Every score is reported raw
//! and normalized to `[0, 1]`.
//!
//! Normalization of WPMI depends on the whole evaluation batch, so batch
//! evaluation is two-phase: score every pair with [`score`], then call
//! [`normalize_batch`] on the collected scores before comparing them.

pub mod binary;
pub mod correlation;
pub mod normalize;
pub mod ranking;
mod spec;

use serde::{Deserialize, Serialize};

pub use binary::{ConfusionCounts, confusion};
pub use normalize::{BatchRange, NormContext, Normalized, normalize};
pub use ranking::{auc, auprc_curve, average_ranks};
pub use spec::{BaseMetric, DEFAULT_ALPHA, DEFAULT_LAMBDA, Metric, MetricSpec, ScoreRange};

use crate::error::{EvalError, Result};
use crate::vectors::{ActivationVector, ConceptVector, top_alpha, top_and_random_sample};

/// Lower clamp applied to concept values before taking logs in WPMI.
pub const WPMI_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub raw: f64,
    pub normalized: f64,
    /// Normalization fell back to 0.5 because its context had zero range.
    #[serde(default)]
    pub degenerate: bool,
}

/// Score one (neuron, concept) pair.
///
/// For batch-normalized metrics the returned `normalized` value treats the
/// pair as a batch of one (and is flagged degenerate); use
/// [`normalize_batch`] once all pairs of the batch are scored.
pub fn score(spec: &MetricSpec, a: &ActivationVector, c: &ConceptVector) -> Result<Score> {
    spec.validate()?;
    if a.len() != c.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: c.len(),
        });
    }
    match spec.metric {
        Metric::Base(m) => base_score(m, spec, a, c),
        Metric::Harmonic(x, y) => {
            let s1 = base_score(x, spec, a, c)?;
            let s2 = base_score(y, spec, a, c)?;
            let h = harmonic_combine(s1.normalized, s2.normalized);
            Ok(Score {
                raw: h,
                normalized: h,
                degenerate: s1.degenerate || s2.degenerate,
            })
        }
    }
}

/// Re-normalize batch-dependent scores against the batch's own range.
/// A no-op for every other metric.
pub fn normalize_batch(metric: Metric, scores: &mut [Score]) {
    if metric.range() != ScoreRange::Batch {
        return;
    }
    let ctx = NormContext {
        activation_range: None,
        batch: BatchRange::of(scores.iter().map(|s| s.raw)),
    };
    for s in scores.iter_mut() {
        let n = normalize(metric, s.raw, &ctx);
        s.normalized = n.value;
        s.degenerate = n.degenerate;
    }
}

/// Harmonic mean of two normalized scores; zero if either is zero.
pub fn harmonic_combine(s1: f64, s2: f64) -> f64 {
    if s1 <= 0.0 || s2 <= 0.0 {
        0.0
    } else {
        2.0 * s1 * s2 / (s1 + s2)
    }
}

fn activation_range(a: &[f64]) -> f64 {
    let (lo, hi) = a
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

fn base_score(
    metric: BaseMetric,
    spec: &MetricSpec,
    a: &ActivationVector,
    c: &ConceptVector,
) -> Result<Score> {
    let raw = raw_base(metric, spec, a, c)?;
    let ctx = NormContext {
        activation_range: Some(activation_range(a.values())),
        batch: BatchRange::of([raw]),
    };
    let n = normalize(Metric::Base(metric), raw, &ctx);
    Ok(Score {
        raw,
        normalized: n.value,
        degenerate: n.degenerate,
    })
}

fn raw_base(
    metric: BaseMetric,
    spec: &MetricSpec,
    a: &ActivationVector,
    c: &ConceptVector,
) -> Result<f64> {
    let n = a.len();
    match metric {
        m if m.is_binary() => {
            let a_bits = top_alpha(a.values(), spec.alpha)?;
            confusion(&a_bits, &c.binarized())?.metric(m)
        }
        BaseMetric::Auc => {
            let a_bits = top_alpha(a.values(), spec.alpha)?;
            if a_bits.popcount() == n {
                return Err(EvalError::NeuronAlwaysActive);
            }
            auc(&a_bits, c.values())
        }
        BaseMetric::InverseAuc => {
            let c_bits = c.binarized();
            match c_bits.popcount() {
                0 => Err(EvalError::ConceptNeverActive),
                k if k == n => Err(EvalError::ConceptAlwaysActive),
                _ => auc(&c_bits, a.values()),
            }
        }
        BaseMetric::Correlation => correlation::pearson(a.values(), c.values()),
        BaseMetric::Spearman => correlation::spearman(a.values(), c.values()),
        BaseMetric::CorrelationTr | BaseMetric::SpearmanTr => {
            let s = top_and_random_sample(a, c, &spec.tr, spec.seed)?;
            if metric == BaseMetric::CorrelationTr {
                correlation::pearson(s.activations.values(), s.concepts.values())
            } else {
                correlation::spearman(s.activations.values(), s.concepts.values())
            }
        }
        BaseMetric::Cosine => correlation::cosine(a.values(), c.values()),
        BaseMetric::Wpmi => wpmi(a, c, spec.alpha, spec.lambda),
        BaseMetric::Mad => mad(a, c),
        BaseMetric::Auprc => auprc_curve(&top_alpha(a.values(), spec.alpha)?, c.values()),
        BaseMetric::InverseAuprc => auprc_curve(&c.binarized(), a.values()),
        _ => unreachable!("binary metrics handled above"),
    }
}

/// `sum over top-alpha inputs of log(c_i) - lambda * log(mean(c))`, with
/// concept values clamped to `[WPMI_FLOOR, 1]` first.
fn wpmi(a: &ActivationVector, c: &ConceptVector, alpha: f64, lambda: f64) -> Result<f64> {
    let a_bits = top_alpha(a.values(), alpha)?;
    let clamped: Vec<f64> = c.values().iter().map(|v| v.max(WPMI_FLOOR)).collect();
    let log_mean = (clamped.iter().sum::<f64>() / clamped.len() as f64).ln();
    Ok(a_bits
        .bits()
        .iter()
        .zip(&clamped)
        .filter(|(b, _)| **b)
        .map(|(_, v)| v.ln() - lambda * log_mean)
        .sum())
}

/// Mean activation where the concept is present minus mean where it is not.
fn mad(a: &ActivationVector, c: &ConceptVector) -> Result<f64> {
    let c_bits = c.binarized();
    let k = c_bits.popcount();
    if k == 0 {
        return Err(EvalError::ConceptNeverActive);
    }
    if k == a.len() {
        return Err(EvalError::ConceptAlwaysActive);
    }
    // Re-based at the minimum so constant shifts cancel exactly.
    let min = a.values().iter().copied().fold(f64::INFINITY, f64::min);
    let (mut on, mut off) = (0.0, 0.0);
    for (&v, &b) in a.values().iter().zip(c_bits.bits()) {
        if b {
            on += v - min;
        } else {
            off += v - min;
        }
    }
    Ok(on / k as f64 - off / (a.len() - k) as f64)
}
