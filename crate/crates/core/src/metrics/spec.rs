use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{EvalError, Result};
use crate::vectors::TrParams;

/// The eighteen single similarity metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseMetric {
    Recall,
    Precision,
    F1,
    IoU,
    Accuracy,
    BalancedAcc,
    InverseBalancedAcc,
    Auc,
    InverseAuc,
    Correlation,
    CorrelationTr,
    Spearman,
    SpearmanTr,
    Cosine,
    Wpmi,
    Mad,
    Auprc,
    InverseAuprc,
}

/// How a raw score is mapped onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreRange {
    /// Already in `[0, 1]`.
    Unit,
    /// In `[-1, 1]`, mapped by `(s + 1) / 2`.
    Symmetric,
    /// Divided by the activation range, then treated as [`ScoreRange::Symmetric`].
    ActivationScaled,
    /// Unbounded; min-max normalized over the evaluation batch.
    Batch,
}

impl BaseMetric {
    pub const ALL: [BaseMetric; 18] = [
        BaseMetric::Recall,
        BaseMetric::Precision,
        BaseMetric::F1,
        BaseMetric::IoU,
        BaseMetric::Accuracy,
        BaseMetric::BalancedAcc,
        BaseMetric::InverseBalancedAcc,
        BaseMetric::Auc,
        BaseMetric::InverseAuc,
        BaseMetric::Correlation,
        BaseMetric::CorrelationTr,
        BaseMetric::Spearman,
        BaseMetric::SpearmanTr,
        BaseMetric::Cosine,
        BaseMetric::Wpmi,
        BaseMetric::Mad,
        BaseMetric::Auprc,
        BaseMetric::InverseAuprc,
    ];

    /// The seven metrics that are functions of the confusion matrix alone.
    pub const BINARY: [BaseMetric; 7] = [
        BaseMetric::Recall,
        BaseMetric::Precision,
        BaseMetric::F1,
        BaseMetric::IoU,
        BaseMetric::Accuracy,
        BaseMetric::BalancedAcc,
        BaseMetric::InverseBalancedAcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseMetric::Recall => "recall",
            BaseMetric::Precision => "precision",
            BaseMetric::F1 => "f1",
            BaseMetric::IoU => "iou",
            BaseMetric::Accuracy => "accuracy",
            BaseMetric::BalancedAcc => "balanced_acc",
            BaseMetric::InverseBalancedAcc => "inverse_balanced_acc",
            BaseMetric::Auc => "auc",
            BaseMetric::InverseAuc => "inverse_auc",
            BaseMetric::Correlation => "correlation",
            BaseMetric::CorrelationTr => "correlation_tr",
            BaseMetric::Spearman => "spearman",
            BaseMetric::SpearmanTr => "spearman_tr",
            BaseMetric::Cosine => "cosine",
            BaseMetric::Wpmi => "wpmi",
            BaseMetric::Mad => "mad",
            BaseMetric::Auprc => "auprc",
            BaseMetric::InverseAuprc => "inverse_auprc",
        }
    }

    pub fn is_binary(self) -> bool {
        Self::BINARY.contains(&self)
    }

    /// Whether the activation is binarized with `top_alpha` (and so `alpha`
    /// is a hyperparameter of the metric).
    pub fn uses_alpha(self) -> bool {
        self.is_binary()
            || matches!(
                self,
                BaseMetric::Auc
                    | BaseMetric::InverseAuc
                    | BaseMetric::Wpmi
                    | BaseMetric::Auprc
                    | BaseMetric::InverseAuprc
            )
    }

    pub fn uses_sampling(self) -> bool {
        matches!(self, BaseMetric::CorrelationTr | BaseMetric::SpearmanTr)
    }

    pub fn range(self) -> ScoreRange {
        match self {
            BaseMetric::Correlation
            | BaseMetric::CorrelationTr
            | BaseMetric::Spearman
            | BaseMetric::SpearmanTr
            | BaseMetric::Cosine => ScoreRange::Symmetric,
            BaseMetric::Mad => ScoreRange::ActivationScaled,
            BaseMetric::Wpmi => ScoreRange::Batch,
            _ => ScoreRange::Unit,
        }
    }
}

impl fmt::Display for BaseMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn canonical(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| if c == '-' { '_' } else { c })
        .collect()
}

impl FromStr for BaseMetric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        let key = canonical(s);
        let found = match key.as_str() {
            "f1_score" | "f1score" | "dice" => Some(BaseMetric::F1),
            "jaccard" => Some(BaseMetric::IoU),
            "balanced_accuracy" => Some(BaseMetric::BalancedAcc),
            "inverse_balanced_accuracy" => Some(BaseMetric::InverseBalancedAcc),
            "auroc" => Some(BaseMetric::Auc),
            "pearson" => Some(BaseMetric::Correlation),
            "correlation(t&r)" | "correlation_t&r" => Some(BaseMetric::CorrelationTr),
            "spearman(t&r)" | "spearman_t&r" => Some(BaseMetric::SpearmanTr),
            _ => BaseMetric::ALL.into_iter().find(|m| m.name() == key),
        };
        found.ok_or_else(|| EvalError::UnknownMetric(s.to_string()))
    }
}

/// A single metric, or the harmonic mean of two normalized base metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Base(BaseMetric),
    Harmonic(BaseMetric, BaseMetric),
}

impl Metric {
    pub fn harmonic(first: BaseMetric, second: BaseMetric) -> Result<Self> {
        let m = Metric::Harmonic(first, second);
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if let Metric::Harmonic(x, y) = self {
            if x == y {
                return Err(EvalError::InvalidParameter(format!(
                    "harmonic components must be distinct, got {x} twice"
                )));
            }
            if x.range() == ScoreRange::Batch || y.range() == ScoreRange::Batch {
                return Err(EvalError::InvalidParameter(
                    "batch-normalized metrics cannot be harmonic components".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn components(&self) -> Vec<BaseMetric> {
        match *self {
            Metric::Base(m) => vec![m],
            Metric::Harmonic(x, y) => vec![x, y],
        }
    }

    pub fn uses_alpha(&self) -> bool {
        self.components().into_iter().any(BaseMetric::uses_alpha)
    }

    pub fn range(&self) -> ScoreRange {
        match self {
            Metric::Base(m) => m.range(),
            Metric::Harmonic(..) => ScoreRange::Unit,
        }
    }
}

impl From<BaseMetric> for Metric {
    fn from(m: BaseMetric) -> Self {
        Metric::Base(m)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Base(m) => write!(f, "{m}"),
            Metric::Harmonic(x, y) => write!(f, "harmonic({x},{y})"),
        }
    }
}

impl FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        let key = canonical(s);
        if let Some(inner) = key
            .strip_prefix("harmonic(")
            .and_then(|rest| rest.strip_suffix(')'))
        {
            let (x, y) = inner
                .split_once(',')
                .ok_or_else(|| EvalError::UnknownMetric(s.to_string()))?;
            return Metric::harmonic(x.parse()?, y.parse()?);
        }
        Ok(Metric::Base(
            key.parse()
                .map_err(|_| EvalError::UnknownMetric(s.to_string()))?,
        ))
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Default activation binarization fraction when none is selected.
pub const DEFAULT_ALPHA: f64 = 0.005;
/// Default WPMI weight.
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// A metric together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub metric: Metric,
    pub alpha: f64,
    pub lambda: f64,
    pub tr: TrParams,
    pub seed: u64,
}

impl MetricSpec {
    pub fn new(metric: impl Into<Metric>) -> Self {
        Self {
            metric: metric.into(),
            alpha: DEFAULT_ALPHA,
            lambda: DEFAULT_LAMBDA,
            tr: TrParams::default(),
            seed: 0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tr(mut self, tr: TrParams) -> Self {
        self.tr = tr;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.metric.validate()?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(EvalError::InvalidParameter(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(EvalError::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}
