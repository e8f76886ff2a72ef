//! Evaluation engine for neuron explanations.
//!
//! Scores how well a concept vector explains a neuron's activations with
//! eighteen similarity metrics, checks metrics with the Missing/Extra labels
//! sanity tests (by simulation and in closed form for the binary metrics) and
//! ranks metrics by meta-AUPRC on neurons with known concepts.

pub mod error;
pub mod metaeval;
pub mod metrics;
pub mod perturbation;
pub mod rng;
pub mod theory;
pub mod vectors;

pub use error::{EvalError, Result};
pub use metrics::{BaseMetric, Metric, MetricSpec, Score, score};
pub use vectors::{ActivationVector, BinaryVector, ConceptVector};
