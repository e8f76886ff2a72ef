//! Synthetic known-concept settings.

use std::collections::BTreeMap;

use rand::Rng;
use rand::seq::SliceRandom;
use rand::seq::index;

use super::KnownConceptSetting;
use crate::error::{EvalError, Result};
use crate::rng::{self, StreamRng};
use crate::vectors::{ActivationVector, ConceptVector};

/// Prevalences distractor concepts are drawn from.
const DISTRACTOR_PREVALENCE: [f64; 7] = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5];

/// Prevalence of every true concept.
pub const TRUE_PREVALENCE: f64 = 0.01;

fn random_bits(rng: &mut StreamRng, n: usize, ones: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for i in index::sample(rng, n, ones) {
        v[i] = 1.0;
    }
    v
}

fn count(prevalence: f64, n: usize) -> usize {
    ((prevalence * n as f64).round() as usize).clamp(1, n - 1)
}

/// Concepts in a seeded random order with opaque ids `c00`, `c01`, ...
/// Returns the concepts and, for each generated vector, the id it received.
fn shuffled_concepts(
    values: Vec<Vec<f64>>,
    rng: &mut StreamRng,
) -> Result<(Vec<ConceptVector>, Vec<String>)> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.shuffle(rng);
    let width = values.len().to_string().len().max(2);
    let mut ids = vec![String::new(); values.len()];
    let mut concepts = Vec::with_capacity(values.len());
    for (slot, &j) in order.iter().enumerate() {
        ids[j] = format!("c{slot:0width$}");
        concepts.push(ConceptVector::new(ids[j].clone(), values[j].clone())?);
    }
    Ok((concepts, ids))
}

fn neuron_id(k: usize, total: usize) -> String {
    let width = total.to_string().len().max(2);
    format!("n{k:0width$}")
}

/// Each neuron's activation equals its true concept's binary labels; the
/// other concepts are random with mixed prevalence.
///
/// True concepts have exactly `round(0.01 n)` positives.
pub fn exact_match(
    n: usize,
    neurons: usize,
    distractors: usize,
    seed: u64,
) -> Result<KnownConceptSetting> {
    if n < 100 || neurons < 2 {
        return Err(EvalError::InvalidParameter(
            "exact-match setting needs n >= 100 and at least 2 neurons".into(),
        ));
    }
    let mut rng = rng::stream(seed, &["synthetic".into(), "exact-match".into()]);
    let mut values: Vec<Vec<f64>> = (0..neurons)
        .map(|_| random_bits(&mut rng, n, count(TRUE_PREVALENCE, n)))
        .collect();
    for _ in 0..distractors {
        let p = DISTRACTOR_PREVALENCE[rng.gen_range(0..DISTRACTOR_PREVALENCE.len())];
        values.push(random_bits(&mut rng, n, count(p, n)));
    }
    let activations = values[..neurons]
        .iter()
        .enumerate()
        .map(|(k, v)| ActivationVector::new(neuron_id(k, neurons), v.clone()))
        .collect::<Result<Vec<_>>>()?;
    let (concepts, ids) = shuffled_concepts(values, &mut rng)?;
    let truth = (0..neurons)
        .map(|k| (neuron_id(k, neurons), ids[k].clone()))
        .collect();
    KnownConceptSetting::new("exact-match", activations, concepts, truth)
}

/// Inputs, neurons and concepts of the bundled confounded setting.
pub const CONFOUNDED_SHAPE: (usize, usize, usize) = (2048, 20, 60);

/// Neurons fire strongly on their true concept and carry a weak background
/// ordering. Each neuron also has two broad "confounder" concepts covering the
/// upper half and the upper quarter of its background; the other neurons'
/// true concepts act as random distractors.
///
/// Activations are `100 * c_true + u` with `u` a permutation of
/// `{0, 1/n, ..., (n-1)/n}`, so every value is exact in binary floating point.
/// Rank-based scores are dominated by the background order and prefer the
/// confounders; magnitude-aware scores find the true concept.
pub fn confounded(seed: u64) -> Result<KnownConceptSetting> {
    let (n, neurons, _) = CONFOUNDED_SHAPE;
    let mut rng = rng::stream(seed, &["synthetic".into(), "confounded".into()]);
    let truth_values: Vec<Vec<f64>> = (0..neurons)
        .map(|_| random_bits(&mut rng, n, count(TRUE_PREVALENCE, n)))
        .collect();
    let mut activations = Vec::with_capacity(neurons);
    let mut halves = Vec::with_capacity(neurons);
    let mut quarters = Vec::with_capacity(neurons);
    for (k, c) in truth_values.iter().enumerate() {
        let mut u: Vec<usize> = (0..n).collect();
        u.shuffle(&mut rng);
        let a: Vec<f64> = c
            .iter()
            .zip(&u)
            .map(|(&ci, &ui)| 100.0 * ci + ui as f64 / n as f64)
            .collect();
        let above = |num: usize, den: usize| -> Vec<f64> {
            u.iter()
                .map(|&ui| if den * ui >= num * n { 1.0 } else { 0.0 })
                .collect()
        };
        halves.push(above(1, 2));
        quarters.push(above(3, 4));
        activations.push(ActivationVector::new(neuron_id(k, neurons), a)?);
    }
    let mut values = truth_values;
    values.extend(halves);
    values.extend(quarters);
    let (concepts, ids) = shuffled_concepts(values, &mut rng)?;
    let truth: BTreeMap<String, String> = (0..neurons)
        .map(|k| (neuron_id(k, neurons), ids[k].clone()))
        .collect();
    KnownConceptSetting::new("confounded", activations, concepts, truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let s = confounded(0).unwrap();
        assert_eq!(s.activations.len(), 20);
        assert_eq!(s.concepts.len(), 60);
        assert_eq!(s.activations[0].len(), 2048);
        assert_eq!(s, confounded(0).unwrap());
        assert_ne!(s, confounded(1).unwrap());
        let e = exact_match(1000, 3, 4, 2).unwrap();
        assert_eq!(e.concepts.len(), 7);
        for a in &e.activations {
            let target = &e.truth[a.id()];
            let c = e.concepts.iter().find(|c| c.id() == target).unwrap();
            assert_eq!(a.values(), c.values());
            assert_eq!(c.binarized().popcount(), 10);
        }
    }

    #[test]
    fn confounded_values_are_dyadic() {
        let s = confounded(3).unwrap();
        for a in &s.activations {
            for &v in a.values() {
                assert_eq!((v * 2048.0).fract(), 0.0);
            }
        }
    }
}
