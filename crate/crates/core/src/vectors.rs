//! Activation and concept vectors, binarization, and input sampling.

use std::cmp::Ordering;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::rng;

/// Per-input activations of one unit over a probing dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationVector {
    id: String,
    values: Vec<f64>,
}

impl ActivationVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        check_len(values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite { index });
        }
        Ok(Self {
            id: id.into(),
            values,
        })
    }

    pub fn from_binary(id: impl Into<String>, bits: &BinaryVector) -> Result<Self> {
        Self::new(id, bits.to_f64())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same activations shifted by a constant, keeping the id.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.values.iter().map(|v| v + offset).collect(),
        )
    }
}

/// Per-input concept presence values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptVector {
    id: String,
    values: Vec<f64>,
}

impl ConceptVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        check_len(values.len())?;
        check_unit_interval(&values)?;
        Ok(Self {
            id: id.into(),
            values,
        })
    }

    pub fn from_binary(id: impl Into<String>, bits: &BinaryVector) -> Result<Self> {
        Self::new(id, bits.to_f64())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Positive set under [`round_half`].
    pub fn binarized(&self) -> BinaryVector {
        BinaryVector(self.values.iter().map(|&v| v >= 0.5).collect())
    }
}

fn check_len(n: usize) -> Result<()> {
    match n {
        0 => Err(EvalError::EmptyVector),
        1 => Err(EvalError::TooShort(1)),
        _ => Ok(()),
    }
}

fn check_unit_interval(values: &[f64]) -> Result<()> {
    match values
        .iter()
        .position(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
    {
        Some(index) => Err(EvalError::ConceptOutOfRange {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// A `{0,1}` vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryVector(Vec<bool>);

impl BinaryVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }
}

impl From<Vec<bool>> for BinaryVector {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

impl FromIterator<bool> for BinaryVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Number of ones produced by [`top_alpha`] on `n` inputs.
pub fn top_alpha_count(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64).round() as usize).clamp(1, n.max(1))
}

/// Descending by value, ascending by index on ties.
fn rank_order(z: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    |&i, &j| z[j].total_cmp(&z[i]).then(i.cmp(&j))
}

/// Indices of the `k` largest entries (lowest index first among ties), ascending.
fn top_indices(z: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    if k < z.len() && k > 0 {
        idx.select_nth_unstable_by(k - 1, rank_order(z));
    }
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

fn check_finite(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(EvalError::EmptyVector);
    }
    match z.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(EvalError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Marks the `max(1, round(alpha * n))` largest entries.
///
/// Ties at the threshold go to the lower index, so the popcount is exact
/// regardless of how many entries share the cut-off value.
pub fn top_alpha(z: &[f64], alpha: f64) -> Result<BinaryVector> {
    check_finite(z)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(EvalError::InvalidParameter(format!(
            "alpha must lie in (0,1], got {alpha}"
        )));
    }
    let k = top_alpha_count(alpha, z.len());
    let mut bits = vec![false; z.len()];
    for i in top_indices(z, k) {
        bits[i] = true;
    }
    Ok(BinaryVector(bits))
}

/// `1` where the concept value is at least one half.
pub fn round_half(c: &[f64]) -> Result<BinaryVector> {
    if c.is_empty() {
        return Err(EvalError::EmptyVector);
    }
    check_unit_interval(c)?;
    Ok(c.iter().map(|&v| v >= 0.5).collect())
}

/// Top-and-random sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrParams {
    pub n_top: usize,
    pub n_rand: usize,
    pub top_frac: f64,
}

impl Default for TrParams {
    fn default() -> Self {
        Self {
            n_top: 25,
            n_rand: 25,
            top_frac: 0.002,
        }
    }
}

impl TrParams {
    /// Size of the pool the top part is drawn from: `ceil(top_frac * n)`.
    pub fn pool_size(&self, n: usize) -> usize {
        // Guard against 0.002 * 50_000 = 100.00000000000001.
        let raw = self.top_frac * n as f64;
        ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
    }
}

/// Evaluation subset produced by [`top_and_random_sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub activations: ActivationVector,
    pub concepts: ConceptVector,
    pub indices: Vec<usize>,
}

/// Draw `n_top` inputs from the top `ceil(top_frac * n)` activating inputs and
/// `n_rand` inputs from the rest, both uniformly without replacement.
///
/// With `n_top == 0` the random part is drawn from all inputs. The stream is
/// keyed on `seed` and the unit id, so every neuron gets its own subset.
pub fn top_and_random_sample(
    a: &ActivationVector,
    c: &ConceptVector,
    params: &TrParams,
    seed: u64,
) -> Result<SamplePair> {
    let n = a.len();
    if c.len() != n {
        return Err(EvalError::LengthMismatch {
            left: n,
            right: c.len(),
        });
    }
    if !(params.top_frac > 0.0 && params.top_frac <= 1.0) {
        return Err(EvalError::InvalidParameter(format!(
            "top_frac must lie in (0,1], got {}",
            params.top_frac
        )));
    }
    let total = params.n_top + params.n_rand;
    if total > n {
        return Err(EvalError::SampleLargerThanPool {
            requested: total,
            available: n,
        });
    }

    let mut rng = rng::stream(seed, &["top-and-random".into(), a.id().into()]);
    let mut indices = Vec::with_capacity(total);
    let rest: Vec<usize> = if params.n_top > 0 {
        let pool = top_indices(a.values(), params.pool_size(n));
        if params.n_top > pool.len() {
            return Err(EvalError::SampleLargerThanPool {
                requested: params.n_top,
                available: pool.len(),
            });
        }
        let mut top: Vec<usize> = index::sample(&mut rng, pool.len(), params.n_top)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        top.sort_unstable();
        indices.extend(top);
        let mut in_pool = vec![false; n];
        for &i in &pool {
            in_pool[i] = true;
        }
        (0..n).filter(|&i| !in_pool[i]).collect()
    } else {
        (0..n).collect()
    };
    if params.n_rand > rest.len() {
        return Err(EvalError::SampleLargerThanPool {
            requested: params.n_rand,
            available: rest.len(),
        });
    }
    let mut random: Vec<usize> = index::sample(&mut rng, rest.len(), params.n_rand)
        .into_iter()
        .map(|i| rest[i])
        .collect();
    random.sort_unstable();
    indices.extend(random);

    let av = indices.iter().map(|&i| a.values()[i]).collect();
    let cv = indices.iter().map(|&i| c.values()[i]).collect();
    Ok(SamplePair {
        activations: ActivationVector::new(a.id(), av)?,
        concepts: ConceptVector::new(c.id(), cv)?,
        indices,
    })
}
