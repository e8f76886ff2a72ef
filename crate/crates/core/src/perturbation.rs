//! Missing and Extra labels perturbations, per-neuron score differences and
//! Decrease Acc.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::metrics::{self, MetricSpec, Score};
use crate::rng;
use crate::vectors::{ActivationVector, ConceptVector};

/// Threshold below which a score difference counts as a decrease.
pub const DEFAULT_EPSILON: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    Missing,
    Extra,
    /// The perturbed concept is provided by the caller.
    Supplied,
}

impl PerturbKind {
    pub fn name(self) -> &'static str {
        match self {
            PerturbKind::Missing => "missing",
            PerturbKind::Extra => "extra",
            PerturbKind::Supplied => "supplied",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub kind: PerturbKind,
    /// Probability of dropping each positive label (Missing).
    pub p: f64,
    /// Target ratio of positives after adding labels (Extra).
    pub r_plus: f64,
    pub n_trials: usize,
    pub seed: u64,
    #[serde(skip)]
    pub supplied: Option<ConceptVector>,
}

impl PerturbSpec {
    fn with_kind(kind: PerturbKind) -> Self {
        Self {
            kind,
            p: 0.5,
            r_plus: 2.0,
            n_trials: 1,
            seed: 0,
            supplied: None,
        }
    }

    pub fn missing() -> Self {
        Self::with_kind(PerturbKind::Missing)
    }

    pub fn extra() -> Self {
        Self::with_kind(PerturbKind::Extra)
    }

    pub fn supplied(c: ConceptVector) -> Self {
        Self {
            supplied: Some(c),
            ..Self::with_kind(PerturbKind::Supplied)
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    /// Keep ratio for Missing; equivalent to `p = 1 - r_minus`.
    pub fn with_r_minus(mut self, r_minus: f64) -> Self {
        self.p = 1.0 - r_minus;
        self
    }

    pub fn r_minus(&self) -> f64 {
        1.0 - self.p
    }

    pub fn with_r_plus(mut self, r_plus: f64) -> Self {
        self.r_plus = r_plus;
        self
    }

    pub fn with_trials(mut self, n_trials: usize) -> Self {
        self.n_trials = n_trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(EvalError::InvalidParameter(format!(
                "p must lie in [0,1], got {}",
                self.p
            )));
        }
        if !(self.r_plus >= 1.0 && self.r_plus.is_finite()) {
            return Err(EvalError::InvalidParameter(format!(
                "r_plus must be at least 1, got {}",
                self.r_plus
            )));
        }
        if self.n_trials == 0 {
            return Err(EvalError::InvalidParameter(
                "n_trials must be at least 1".into(),
            ));
        }
        if self.kind == PerturbKind::Supplied && self.supplied.is_none() {
            return Err(EvalError::InvalidParameter(
                "supplied perturbation without a concept vector".into(),
            ));
        }
        Ok(())
    }
}

/// Set each positive entry to 0 with probability `p`.
///
/// One uniform is drawn per input in index order, so the outcome at index `i`
/// depends only on `seed` and `i`.
pub fn missing_labels(c: &ConceptVector, p: f64, seed: u64) -> Result<ConceptVector> {
    let bits = c.binarized();
    if bits.popcount() == 0 {
        return Err(EvalError::NothingToRemove);
    }
    let mut rng = rng::stream(seed, &["missing-labels".into()]);
    let values = c
        .values()
        .iter()
        .zip(bits.bits())
        .map(|(&v, &pos)| {
            let u: f64 = rng.gen_range(0.0..1.0);
            if pos && u < p { 0.0 } else { v }
        })
        .collect();
    ConceptVector::new(c.id(), values)
}

/// Set each negative entry to 1 with probability
/// `min(1, (r_plus - 1) * pos / (n - pos))`.
pub fn extra_labels(c: &ConceptVector, r_plus: f64, seed: u64) -> Result<ConceptVector> {
    let bits = c.binarized();
    let pos = bits.popcount();
    let n = c.len();
    if pos == n {
        return Err(EvalError::NothingToAdd);
    }
    let q = ((r_plus - 1.0) * pos as f64 / (n - pos) as f64).min(1.0);
    let mut rng = rng::stream(seed, &["extra-labels".into()]);
    let values = c
        .values()
        .iter()
        .zip(bits.bits())
        .map(|(&v, &pos)| {
            let u: f64 = rng.gen_range(0.0..1.0);
            if !pos && u < q { 1.0 } else { v }
        })
        .collect();
    ConceptVector::new(c.id(), values)
}

/// The perturbed concept for one trial of one unit.
pub fn perturbed(
    c: &ConceptVector,
    spec: &PerturbSpec,
    unit_id: &str,
    trial: usize,
) -> Result<ConceptVector> {
    let seed = rng::derive_seed(
        spec.seed,
        &[spec.kind.name().into(), unit_id.into(), trial.into()],
    );
    match spec.kind {
        PerturbKind::Missing => missing_labels(c, spec.p, seed),
        PerturbKind::Extra => extra_labels(c, spec.r_plus, seed),
        PerturbKind::Supplied => {
            let s = spec.supplied.as_ref().ok_or_else(|| {
                EvalError::InvalidParameter("supplied perturbation without a concept vector".into())
            })?;
            if s.len() != c.len() {
                return Err(EvalError::LengthMismatch {
                    left: c.len(),
                    right: s.len(),
                });
            }
            Ok(s.clone())
        }
    }
}

/// Original and perturbed scores of one neuron, before any batch normalization.
#[derive(Debug, Clone, PartialEq)]
struct NeuronScores {
    original: Score,
    perturbed: Vec<Score>,
}

impl NeuronScores {
    fn delta(&self) -> f64 {
        let sum: f64 = self.perturbed.iter().map(|s| s.normalized).sum();
        sum / self.perturbed.len() as f64 - self.original.normalized
    }
}

fn neuron_scores(
    metric: &MetricSpec,
    a: &ActivationVector,
    c: &ConceptVector,
    perturb: &PerturbSpec,
) -> Result<NeuronScores> {
    let original = metrics::score(metric, a, c)?;
    let perturbed = (0..perturb.n_trials)
        .map(|t| metrics::score(metric, a, &perturbed(c, perturb, a.id(), t)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeuronScores {
        original,
        perturbed,
    })
}

/// Re-normalize batch-dependent metrics over every score of the run.
fn normalize_pooled(metric: &MetricSpec, neurons: &mut [NeuronScores]) {
    let mut pooled: Vec<Score> = neurons
        .iter()
        .flat_map(|s| std::iter::once(s.original).chain(s.perturbed.iter().copied()))
        .collect();
    metrics::normalize_batch(metric.metric, &mut pooled);
    let mut it = pooled.into_iter();
    for s in neurons.iter_mut() {
        s.original = it.next().expect("pooled length");
        for p in s.perturbed.iter_mut() {
            *p = it.next().expect("pooled length");
        }
    }
}

/// Mean over trials of the normalized perturbed score minus the normalized
/// original score.
///
/// Batch-normalized metrics are normalized over this neuron's own original
/// and perturbed scores; use [`sanity_test`] to normalize over many neurons.
pub fn delta_s(
    metric: &MetricSpec,
    a: &ActivationVector,
    c: &ConceptVector,
    perturb: &PerturbSpec,
) -> Result<f64> {
    perturb.validate()?;
    let mut scores = [neuron_scores(metric, a, c, perturb)?];
    normalize_pooled(metric, &mut scores);
    Ok(scores[0].delta())
}

/// Fraction of neurons whose score difference is below `-epsilon`.
pub fn decrease_acc(deltas: &BTreeMap<String, f64>, epsilon: f64) -> Result<f64> {
    if deltas.is_empty() {
        return Err(EvalError::EmptyDeltas);
    }
    let hits = deltas.values().filter(|&&d| d < -epsilon).count();
    Ok(hits as f64 / deltas.len() as f64)
}

/// One neuron of a sanity test.
#[derive(Debug, Clone, PartialEq)]
pub struct SanityCase {
    pub activation: ActivationVector,
    pub concept: ConceptVector,
    /// Perturbed concept for [`PerturbKind::Supplied`].
    pub supplied: Option<ConceptVector>,
}

impl SanityCase {
    pub fn new(activation: ActivationVector, concept: ConceptVector) -> Self {
        Self {
            activation,
            concept,
            supplied: None,
        }
    }

    pub fn with_supplied(mut self, c: ConceptVector) -> Self {
        self.supplied = Some(c);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityResult {
    pub metric: MetricSpec,
    pub test: PerturbKind,
    pub epsilon: f64,
    pub per_neuron_delta: BTreeMap<String, f64>,
    pub decrease_acc: f64,
    /// Neurons left out of Decrease Acc, with the reason.
    pub skipped: BTreeMap<String, String>,
}

/// Run one sanity test of `metric` over a set of neurons.
///
/// Neurons whose original or perturbed score is undefined are skipped and
/// listed with the reason instead of counting as failures.
pub fn sanity_test(
    metric: &MetricSpec,
    cases: &[SanityCase],
    perturb: &PerturbSpec,
    epsilon: f64,
) -> Result<SanityResult> {
    metric.validate()?;
    let mut base = perturb.clone();
    if base.kind == PerturbKind::Supplied {
        base.supplied = None;
    } else {
        base.validate()?;
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(EvalError::InvalidParameter(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let outcomes: Vec<Result<NeuronScores>> = cases
        .par_iter()
        .map(|case| {
            let mut spec = base.clone();
            if spec.kind == PerturbKind::Supplied {
                spec.supplied = case.supplied.clone();
                spec.validate()?;
            }
            neuron_scores(metric, &case.activation, &case.concept, &spec)
        })
        .collect();

    let mut kept_ids = Vec::new();
    let mut kept = Vec::new();
    let mut skipped = BTreeMap::new();
    for (case, outcome) in cases.iter().zip(outcomes) {
        let id = case.activation.id().to_string();
        match outcome {
            Ok(s) => {
                kept_ids.push(id);
                kept.push(s);
            }
            Err(e) => {
                skipped.insert(id, e.to_string());
            }
        }
    }
    normalize_pooled(metric, &mut kept);
    let per_neuron_delta: BTreeMap<String, f64> = kept_ids
        .into_iter()
        .zip(kept.iter().map(NeuronScores::delta))
        .collect();
    let decrease_acc = decrease_acc(&per_neuron_delta, epsilon)?;
    Ok(SanityResult {
        metric: *metric,
        test: perturb.kind,
        epsilon,
        per_neuron_delta,
        decrease_acc,
        skipped,
    })
}
