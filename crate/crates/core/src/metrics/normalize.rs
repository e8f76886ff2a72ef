use serde::{Deserialize, Serialize};

use crate::metrics::{Metric, ScoreRange};

/// Observed raw-score range of one evaluation batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchRange {
    pub min: f64,
    pub max: f64,
}

impl BatchRange {
    /// `None` for an empty batch.
    pub fn of(raw: impl IntoIterator<Item = f64>) -> Option<Self> {
        raw.into_iter().fold(None, |acc, v| match acc {
            None => Some(BatchRange { min: v, max: v }),
            Some(r) => Some(BatchRange {
                min: r.min.min(v),
                max: r.max.max(v),
            }),
        })
    }
}

/// What a normalization may need beyond the raw value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormContext {
    /// `max(a) - min(a)` of the activation the score was computed on.
    pub activation_range: Option<f64>,
    /// Min and max raw score over the evaluation batch.
    pub batch: Option<BatchRange>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub value: f64,
    /// Set when the context could not separate scores (zero range); the value
    /// is then 0.5.
    pub degenerate: bool,
}

impl Normalized {
    fn ok(value: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            degenerate: false,
        }
    }

    fn degenerate() -> Self {
        Self {
            value: 0.5,
            degenerate: true,
        }
    }
}

/// Map a raw score onto `[0, 1]` so that every metric's maximum is 1 and its
/// minimum is 0.
pub fn normalize(metric: Metric, raw: f64, ctx: &NormContext) -> Normalized {
    match metric.range() {
        ScoreRange::Unit => Normalized::ok(raw),
        ScoreRange::Symmetric => Normalized::ok((raw + 1.0) / 2.0),
        ScoreRange::ActivationScaled => match ctx.activation_range {
            Some(range) if range > 0.0 => Normalized::ok((raw / range + 1.0) / 2.0),
            _ => Normalized::degenerate(),
        },
        ScoreRange::Batch => match ctx.batch {
            Some(b) if b.max > b.min => Normalized::ok((raw - b.min) / (b.max - b.min)),
            _ => Normalized::degenerate(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::BaseMetric;

    fn norm(m: BaseMetric, raw: f64) -> f64 {
        normalize(m.into(), raw, &NormContext::default()).value
    }

    #[test]
    fn symmetric_endpoints() {
        assert_eq!(norm(BaseMetric::Correlation, 1.0), 1.0);
        assert_eq!(norm(BaseMetric::Correlation, -1.0), 0.0);
        assert_eq!(norm(BaseMetric::Cosine, 0.0), 0.5);
    }

    #[test]
    fn unit_range_passes_through() {
        assert_eq!(norm(BaseMetric::Recall, 0.67), 0.67);
        assert_eq!(norm(BaseMetric::Auprc, 0.25), 0.25);
    }

    #[test]
    fn correlation_from_missing_labels_row() {
        let s = norm(BaseMetric::Correlation, 0.5777);
        assert!((s - 0.78885).abs() < 1e-12);
        assert!(((s - 1.0) - (-0.2111)).abs() < 1e-4);
    }

    #[test]
    fn mad_scaled_by_activation_range() {
        let ctx = NormContext {
            activation_range: Some(3.0),
            batch: None,
        };
        let n = normalize(BaseMetric::Mad.into(), 1.0, &ctx);
        assert!((n.value - 2.0 / 3.0).abs() < 1e-15);
        assert!(!n.degenerate);
        let flat = normalize(BaseMetric::Mad.into(), 0.0, &NormContext::default());
        assert!(flat.degenerate);
    }

    #[test]
    fn batch_min_max() {
        let batch = BatchRange::of([-4.0, 2.0, 0.0]).unwrap();
        let ctx = NormContext {
            activation_range: None,
            batch: Some(batch),
        };
        assert_eq!(normalize(BaseMetric::Wpmi.into(), -4.0, &ctx).value, 0.0);
        assert_eq!(normalize(BaseMetric::Wpmi.into(), 2.0, &ctx).value, 1.0);
        assert_eq!(normalize(BaseMetric::Wpmi.into(), -1.0, &ctx).value, 0.5);
        let constant = NormContext {
            activation_range: None,
            batch: BatchRange::of([3.0, 3.0]),
        };
        let n = normalize(BaseMetric::Wpmi.into(), 3.0, &constant);
        assert_eq!((n.value, n.degenerate), (0.5, true));
    }
}
