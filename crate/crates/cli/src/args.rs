use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neuroneval::metaeval::{DEFAULT_ALPHA_GRID, DEFAULT_VAL_FRAC};
use neuroneval::metrics::{BaseMetric, DEFAULT_ALPHA, DEFAULT_LAMBDA};
use neuroneval::perturbation::{DEFAULT_EPSILON, PerturbKind};
use neuroneval::theory::{DEFAULT_GAMMAS, DEFAULT_N, DEFAULT_TRIALS};
use neuroneval::vectors::TrParams;
use neuroneval::{Metric, MetricSpec};
use serde::Serialize;

use crate::matrix::MatrixFormat;

#[derive(Debug, Parser)]
#[command(
    name = "neuroneval",
    version,
    about = "Evaluate neuron explanations against concept labels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub config: RunConfig,
}

/// A fully resolved run. Reports embed it verbatim.
#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum RunConfig {
    /// Score every neuron against every concept.
    Score(ScoreArgs),
    /// Run label-perturbation tests on supplied neurons and concepts.
    Sanity(SanityArgs),
    /// Run the perturbation tests on simulated ideal neurons.
    Theory(TheoryArgs),
    /// Meta-evaluate metrics on a setting with known correct explanations.
    Meta(MetaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Missing,
    Extra,
    Supplied,
}

impl From<TestKind> for PerturbKind {
    fn from(t: TestKind) -> Self {
        match t {
            TestKind::Missing => PerturbKind::Missing,
            TestKind::Extra => PerturbKind::Extra,
            TestKind::Supplied => PerturbKind::Supplied,
        }
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: neuroneval::EvalError| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricArgs {
    /// Metric name or `harmonic(x,y)`; repeat for several. Defaults to all eighteen.
    #[arg(long = "metric", value_parser = parse_metric)]
    pub metrics: Vec<Metric>,
    /// WPMI weight.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// T&R: inputs drawn from the top pool.
    #[arg(long, default_value_t = TrParams::default().n_top)]
    pub tr_top: usize,
    /// T&R: inputs drawn from outside the top pool.
    #[arg(long, default_value_t = TrParams::default().n_rand)]
    pub tr_random: usize,
    /// T&R: top pool size as a fraction of inputs.
    #[arg(long, default_value_t = TrParams::default().top_frac)]
    pub tr_frac: f64,
}

impl MetricArgs {
    pub fn resolve(&mut self) {
        if self.metrics.is_empty() {
            self.metrics = BaseMetric::ALL.into_iter().map(Metric::Base).collect();
        }
    }

    pub fn specs(&self, alpha: f64, seed: u64) -> Vec<MetricSpec> {
        let tr = TrParams {
            n_top: self.tr_top,
            n_rand: self.tr_random,
            top_frac: self.tr_frac,
        };
        self.metrics
            .iter()
            .map(|&m| {
                MetricSpec::new(m)
                    .with_alpha(alpha)
                    .with_lambda(self.lambda)
                    .with_tr(tr)
                    .with_seed(seed)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Activation matrix, one column per neuron.
    #[arg(long)]
    pub activations: PathBuf,
    /// Concept matrix, one column per concept, values in [0,1].
    #[arg(long)]
    pub concepts: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_format: Option<MatrixFormat>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric: MetricArgs,
    /// Fraction of inputs kept when binarizing activations.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SanityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// `unit_id,concept_id` CSV naming each neuron's explanation.
    #[arg(long)]
    pub truth: PathBuf,
    /// Perturbed concepts for the supplied test; defaults to the concept matrix.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supplied: Option<PathBuf>,
    /// `unit_id,concept_id` CSV naming each neuron's perturbed concept.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supplied_map: Option<PathBuf>,
    /// Tests to run; defaults to missing and extra, or supplied when a supplied map is given.
    #[arg(long = "test", value_enum)]
    pub tests: Vec<TestKind>,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric: MetricArgs,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Missing labels: probability of dropping each positive label.
    #[arg(long, visible_alias = "r-minus", default_value_t = 0.5)]
    pub p: f64,
    /// Extra labels: target ratio of positives after perturbation.
    #[arg(long, default_value_t = 2.0)]
    pub r_plus: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

impl SanityArgs {
    pub fn resolve(&mut self) {
        self.metric.resolve();
        if self.tests.is_empty() {
            self.tests = if self.supplied_map.is_some() {
                vec![TestKind::Supplied]
            } else {
                vec![TestKind::Missing, TestKind::Extra]
            };
        }
        self.tests.dedup();
    }

    pub fn r_minus(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TheoryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub metric: MetricArgs,
    /// Activation frequencies of the simulated neurons.
    #[arg(long = "gamma", value_delimiter = ',', default_values_t = DEFAULT_GAMMAS)]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, visible_alias = "r-minus", default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub r_plus: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the per-cell curve CSV here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// `unit_id,concept_id` CSV naming each neuron's correct explanation.
    #[arg(long)]
    pub truth: PathBuf,
    /// Setting name used in the report.
    #[arg(long, default_value = "setting")]
    pub name: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric: MetricArgs,
    /// Candidate binarization fractions tried on the validation neurons.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHA_GRID)]
    pub alpha_grid: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_VAL_FRAC)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

impl RunConfig {
    /// Fill in list defaults that clap cannot express.
    pub fn resolve(&mut self) {
        match self {
            RunConfig::Score(a) => a.metric.resolve(),
            RunConfig::Sanity(a) => a.resolve(),
            RunConfig::Theory(a) => a.metric.resolve(),
            RunConfig::Meta(a) => a.metric.resolve(),
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            RunConfig::Score(a) => &a.output,
            RunConfig::Sanity(a) => &a.output,
            RunConfig::Theory(a) => &a.output,
            RunConfig::Meta(a) => &a.output,
        }
    }
}
