//! Meta-evaluation of metrics on neurons whose correct concept is known.
//!
//! A metric scores every (neuron, concept) pair; a good metric ranks the
//! correct pairs above the incorrect ones, which meta-AUPRC measures.

pub mod synthetic;

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::metrics::{self, Metric, MetricSpec, Score, auprc_curve, average_ranks};
use crate::rng;
use crate::vectors::{ActivationVector, BinaryVector, ConceptVector};

/// Activation binarization fractions searched by default.
pub const DEFAULT_ALPHA_GRID: [f64; 6] = [0.002, 0.005, 0.01, 0.02, 0.05, 0.1];
pub const DEFAULT_VAL_FRAC: f64 = 0.05;
/// Largest fraction of undefined pairs a grid may contain.
pub const MAX_SKIPPED_FRAC: f64 = 0.1;

/// Neurons, candidate concepts, and each neuron's correct concept.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownConceptSetting {
    pub name: String,
    pub activations: Vec<ActivationVector>,
    pub concepts: Vec<ConceptVector>,
    /// Neuron id to concept id.
    pub truth: BTreeMap<String, String>,
}

impl KnownConceptSetting {
    pub fn new(
        name: impl Into<String>,
        activations: Vec<ActivationVector>,
        concepts: Vec<ConceptVector>,
        truth: BTreeMap<String, String>,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            activations,
            concepts,
            truth,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.check(2)
    }

    /// Subsets made for validation may hold a single neuron.
    fn check(&self, min_neurons: usize) -> Result<()> {
        let invalid = |msg: String| Err(EvalError::InvalidSetting(msg));
        if self.activations.len() < min_neurons || self.concepts.len() < 2 {
            return invalid(format!(
                "need at least {min_neurons} neurons and 2 concepts, got {} and {}",
                self.activations.len(),
                self.concepts.len()
            ));
        }
        let n = self.activations[0].len();
        for len in self
            .activations
            .iter()
            .map(ActivationVector::len)
            .chain(self.concepts.iter().map(ConceptVector::len))
        {
            if len != n {
                return Err(EvalError::LengthMismatch {
                    left: n,
                    right: len,
                });
            }
        }
        let neurons = unique_ids(self.activations.iter().map(ActivationVector::id), "neuron")?;
        let concepts = unique_ids(self.concepts.iter().map(ConceptVector::id), "concept")?;
        for (unit, concept) in &self.truth {
            if !neurons.contains(unit.as_str()) {
                return invalid(format!("truth names unknown neuron '{unit}'"));
            }
            if !concepts.contains(concept.as_str()) {
                return invalid(format!(
                    "truth target '{concept}' of '{unit}' is not a concept"
                ));
            }
        }
        if self.truth.is_empty() {
            return invalid("no ground-truth pairs".into());
        }
        Ok(())
    }

    /// The setting restricted to the given neurons, in the given order.
    pub fn subset(&self, neuron_ids: &[String]) -> Result<Self> {
        let by_id: BTreeMap<&str, &ActivationVector> =
            self.activations.iter().map(|a| (a.id(), a)).collect();
        let activations = neuron_ids
            .iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|a| (*a).clone())
                    .ok_or_else(|| EvalError::InvalidSetting(format!("unknown neuron '{id}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let truth = self
            .truth
            .iter()
            .filter(|(k, _)| neuron_ids.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(Self {
            name: self.name.clone(),
            activations,
            concepts: self.concepts.clone(),
            truth,
        })
    }

    /// Same setting with every activation shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Ok(Self {
            activations: self
                .activations
                .iter()
                .map(|a| a.shifted(offset))
                .collect::<Result<_>>()?,
            ..self.clone()
        })
    }
}

fn unique_ids<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<HashSet<&'a str>> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(EvalError::InvalidSetting(format!(
                "duplicate {what} id '{id}'"
            )));
        }
    }
    Ok(seen)
}

/// Scores of every (neuron, concept) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGrid {
    pub neuron_ids: Vec<String>,
    pub concept_ids: Vec<String>,
    /// `raw[k][t]`, `None` where the score is undefined.
    pub raw: Vec<Vec<Option<f64>>>,
    /// `normalized[k][t]`, 0 where the score is undefined.
    pub normalized: Vec<Vec<f64>>,
    pub skipped: usize,
}

impl ScoreGrid {
    /// Indicator of the correct pairs, shaped like the grid.
    pub fn labels(&self, truth: &BTreeMap<String, String>) -> Vec<Vec<bool>> {
        self.neuron_ids
            .iter()
            .map(|k| {
                let target = truth.get(k);
                self.concept_ids.iter().map(|t| Some(t) == target).collect()
            })
            .collect()
    }
}

/// Score every (neuron, concept) pair of the setting.
///
/// Undefined pairs get normalized score 0 and are counted; more than
/// [`MAX_SKIPPED_FRAC`] of them is an error.
pub fn score_grid(setting: &KnownConceptSetting, spec: &MetricSpec) -> Result<ScoreGrid> {
    spec.validate()?;
    setting.check(1)?;
    let rows: Vec<Vec<Option<Score>>> = setting
        .activations
        .par_iter()
        .map(|a| {
            setting
                .concepts
                .iter()
                .map(|c| metrics::score(spec, a, c).ok())
                .collect()
        })
        .collect();

    let total = setting.activations.len() * setting.concepts.len();
    let skipped = rows.iter().flatten().filter(|s| s.is_none()).count();
    if skipped as f64 > MAX_SKIPPED_FRAC * total as f64 {
        return Err(EvalError::IncompatibleSetting { skipped, total });
    }

    let mut defined: Vec<Score> = rows.iter().flatten().flatten().copied().collect();
    metrics::normalize_batch(spec.metric, &mut defined);
    let mut it = defined.into_iter();
    let normalized = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| match s {
                    Some(_) => it.next().expect("one value per defined pair").normalized,
                    None => 0.0,
                })
                .collect()
        })
        .collect();
    Ok(ScoreGrid {
        neuron_ids: setting
            .activations
            .iter()
            .map(|a| a.id().to_string())
            .collect(),
        concept_ids: setting
            .concepts
            .iter()
            .map(|c| c.id().to_string())
            .collect(),
        raw: rows
            .iter()
            .map(|row| row.iter().map(|s| s.map(|s| s.raw)).collect())
            .collect(),
        normalized,
        skipped,
    })
}

/// AUPRC of the flattened grid against the correct-pair indicator.
pub fn meta_auprc(grid: &ScoreGrid, truth: &BTreeMap<String, String>) -> Result<f64> {
    let labels: BinaryVector = grid.labels(truth).into_iter().flatten().collect();
    let predictions: Vec<f64> = grid.normalized.iter().flatten().copied().collect();
    auprc_curve(&labels, &predictions)
}

/// Score a setting and compute its meta-AUPRC in one call.
pub fn evaluate(setting: &KnownConceptSetting, spec: &MetricSpec) -> Result<f64> {
    meta_auprc(&score_grid(setting, spec)?, &setting.truth)
}

/// Disjoint validation and test neuron ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

/// Put `floor(val_frac * K)` randomly chosen neurons in the validation part.
pub fn split_neurons(setting: &KnownConceptSetting, val_frac: f64, seed: u64) -> Result<Split> {
    if !(val_frac > 0.0 && val_frac < 1.0) {
        return Err(EvalError::InvalidParameter(format!(
            "val_frac must lie in (0,1), got {val_frac}"
        )));
    }
    let k = setting.activations.len();
    let n_val = (val_frac * k as f64 + 1e-9).floor() as usize;
    if n_val == 0 {
        return Err(EvalError::InvalidParameter(format!(
            "val_frac {val_frac} leaves no validation neuron among {k}"
        )));
    }
    let mut ids: Vec<String> = setting
        .activations
        .iter()
        .map(|a| a.id().to_string())
        .collect();
    ids.shuffle(&mut rng::stream(seed, &["validation-split".into()]));
    let test = ids.split_off(n_val);
    Ok(Split {
        validation: ids,
        test,
    })
}

/// Hyperparameter search configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub alpha_grid: Vec<f64>,
    pub val_frac: f64,
    pub seed: u64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            val_frac: DEFAULT_VAL_FRAC,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub spec: MetricSpec,
    pub split: Split,
    /// Validation meta-AUPRC per candidate alpha; `None` where undefined.
    pub candidates: Vec<(f64, Option<f64>)>,
}

/// Pick the alpha with the best validation meta-AUPRC (first on ties).
///
/// Metrics without an alpha come back unchanged; the split is made anyway so
/// every metric is reported on the same test neurons.
pub fn select_hyperparams(
    setting: &KnownConceptSetting,
    base: &MetricSpec,
    config: &MetaConfig,
) -> Result<Selection> {
    if config.alpha_grid.is_empty() {
        return Err(EvalError::InvalidParameter("empty alpha grid".into()));
    }
    let split = split_neurons(setting, config.val_frac, config.seed)?;
    if !base.metric.uses_alpha() {
        return Ok(Selection {
            spec: *base,
            split,
            candidates: Vec::new(),
        });
    }
    let validation = setting.subset(&split.validation)?;
    let has_truth = !validation.truth.is_empty();
    let candidates: Vec<(f64, Option<f64>)> = config
        .alpha_grid
        .iter()
        .map(|&alpha| {
            let spec = base.with_alpha(alpha);
            let value = if has_truth {
                evaluate(&validation, &spec).ok()
            } else {
                None
            };
            (alpha, value)
        })
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for &(alpha, value) in &candidates {
        if let Some(v) = value
            && best.is_none_or(|(_, b)| v > b)
        {
            best = Some((alpha, v));
        }
    }
    let alpha = match best {
        Some((alpha, _)) => alpha,
        None if !has_truth => config.alpha_grid[0],
        None => {
            return Err(EvalError::InvalidSetting(format!(
                "{} is undefined on the validation neurons for every alpha",
                base.metric
            )));
        }
    };
    Ok(Selection {
        spec: base.with_alpha(alpha),
        split,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaResult {
    pub setting: String,
    pub metric: MetricSpec,
    /// Meta-AUPRC on the test neurons.
    pub meta_auprc: f64,
    pub selection: Selection,
    /// Test-neuron grid; `score_grid.normalized` holds the predictions.
    pub score_grid: ScoreGrid,
    pub labels: Vec<Vec<bool>>,
}

/// Select hyperparameters on validation neurons and report meta-AUPRC on the
/// remaining test neurons.
pub fn meta_evaluate(
    setting: &KnownConceptSetting,
    base: &MetricSpec,
    config: &MetaConfig,
) -> Result<MetaResult> {
    setting.validate()?;
    let selection = select_hyperparams(setting, base, config)?;
    let test = setting.subset(&selection.split.test)?;
    let grid = score_grid(&test, &selection.spec)?;
    let labels = grid.labels(&test.truth);
    let meta = meta_auprc(&grid, &test.truth)?;
    Ok(MetaResult {
        setting: setting.name.clone(),
        metric: selection.spec,
        meta_auprc: meta,
        selection,
        score_grid: grid,
        labels,
    })
}

/// Average rank of each metric over settings, 1 being best; ties share the
/// mean rank. `table[m][s]` is metric `m`'s meta-AUPRC on setting `s`.
pub fn average_rank(table: &[(Metric, Vec<f64>)]) -> Result<Vec<(Metric, f64)>> {
    let settings = table.first().map_or(0, |(_, v)| v.len());
    if table.is_empty() || settings == 0 {
        return Err(EvalError::InvalidParameter("empty rank table".into()));
    }
    if table.iter().any(|(_, v)| v.len() != settings) {
        return Err(EvalError::InvalidParameter("ragged rank table".into()));
    }
    let mut totals = vec![0.0; table.len()];
    for s in 0..settings {
        let negated: Vec<f64> = table.iter().map(|(_, v)| -v[s]).collect();
        for (t, r) in totals.iter_mut().zip(average_ranks(&negated)) {
            *t += r;
        }
    }
    Ok(table
        .iter()
        .zip(totals)
        .map(|((m, _), t)| (*m, t / settings as f64))
        .collect())
}
