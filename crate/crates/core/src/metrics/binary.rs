//! Confusion counts under the simulation framing and the metrics built on them.
//!
//! The neuron is treated as ground truth and the concept as the prediction,
//! so `fp` counts inputs where the concept fires without the neuron. Passing
//! the arguments the other way round gives the classification framing.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::metrics::BaseMetric;
use crate::vectors::BinaryVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn n(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `||B(a)||_1`
    pub fn neuron_active(&self) -> usize {
        self.tp + self.fn_
    }

    /// `||B(c)||_1`
    pub fn concept_active(&self) -> usize {
        self.tp + self.fp
    }

    /// The same matrix read under the classification framing.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tp,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tn,
        }
    }

    /// Value of one of the seven confusion-matrix metrics.
    pub fn metric(&self, metric: BaseMetric) -> Result<f64> {
        let tp = self.tp as f64;
        let fp = self.fp as f64;
        let fn_ = self.fn_ as f64;
        let tn = self.tn as f64;
        let n = self.n();
        let neuron = self.neuron_active();
        let concept = self.concept_active();
        let concept_on = || {
            if concept == 0 {
                Err(EvalError::ConceptNeverActive)
            } else {
                Ok(())
            }
        };
        match metric {
            BaseMetric::Recall => {
                nonzero(neuron)?;
                Ok(tp / (tp + fn_))
            }
            BaseMetric::Precision => {
                concept_on()?;
                Ok(tp / (tp + fp))
            }
            BaseMetric::F1 => {
                nonzero(neuron + concept)?;
                Ok(2.0 * tp / (2.0 * tp + fp + fn_))
            }
            BaseMetric::IoU => {
                nonzero(self.tp + self.fp + self.fn_)?;
                Ok(tp / (tp + fp + fn_))
            }
            BaseMetric::Accuracy => {
                nonzero(n)?;
                Ok((tp + tn) / n as f64)
            }
            BaseMetric::BalancedAcc => {
                nonzero(neuron)?;
                if neuron == n {
                    return Err(EvalError::NeuronAlwaysActive);
                }
                Ok(tp / (2.0 * (tp + fn_)) + tn / (2.0 * (tn + fp)))
            }
            BaseMetric::InverseBalancedAcc => {
                concept_on()?;
                if concept == n {
                    return Err(EvalError::ConceptAlwaysActive);
                }
                Ok(tp / (2.0 * (tp + fp)) + tn / (2.0 * (tn + fn_)))
            }
            other => Err(EvalError::InvalidParameter(format!(
                "{other} is not a confusion-matrix metric"
            ))),
        }
    }
}

fn nonzero(count: usize) -> Result<()> {
    if count == 0 {
        Err(EvalError::DegenerateConfusion)
    } else {
        Ok(())
    }
}

/// Confusion counts with `a_bits` as ground truth and `c_bits` as prediction.
pub fn confusion(a_bits: &BinaryVector, c_bits: &BinaryVector) -> Result<ConfusionCounts> {
    if a_bits.len() != c_bits.len() {
        return Err(EvalError::LengthMismatch {
            left: a_bits.len(),
            right: c_bits.len(),
        });
    }
    let mut cc = ConfusionCounts::default();
    for (&a, &c) in a_bits.bits().iter().zip(c_bits.bits()) {
        match (a, c) {
            (true, true) => cc.tp += 1,
            (false, true) => cc.fp += 1,
            (true, false) => cc.fn_ += 1,
            (false, false) => cc.tn += 1,
        }
    }
    Ok(cc)
}
