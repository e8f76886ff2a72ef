use std::collections::BTreeMap;
use std::fmt;

use anyhow::anyhow;
use neuroneval::metaeval::{self, KnownConceptSetting, MetaConfig, MetaResult};
use neuroneval::metrics::{self, Score};
use neuroneval::perturbation::{self, PerturbKind, PerturbSpec, SanityCase, SanityResult};
use neuroneval::theory::{self, SuiteRow, TheoryConfig};
use neuroneval::{ActivationVector, ConceptVector, Metric, MetricSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{MetaArgs, OutputFormat, RunConfig, SanityArgs, ScoreArgs, TestKind, TheoryArgs};
use crate::matrix::{self, read_matrix};
use crate::report::{self, num, opt_num};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or malformed inputs.
    Validation(anyhow::Error),
    /// Valid inputs on which the computation could not complete.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "invalid input: {e:#}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

trait Classify<T> {
    fn invalid(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Validation(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

/// Rendered report text plus whether any metric produced a result.
pub struct Rendered {
    pub report: String,
    pub curve: Option<String>,
    pub any_ok: bool,
}

/// Run a resolved config and write its reports.
pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let rendered = render(config)?;
    report::emit(config.output().output.as_deref(), &rendered.report).runtime()?;
    if let (RunConfig::Theory(a), Some(curve)) = (config, &rendered.curve)
        && let Some(path) = &a.curve
    {
        report::emit(Some(path), curve).runtime()?;
    }
    if !rendered.any_ok {
        return Err(Failure::Runtime(anyhow!("no metric produced a result")));
    }
    Ok(())
}

pub fn render(config: &RunConfig) -> Result<Rendered, Failure> {
    match config {
        RunConfig::Score(a) => score(a, config),
        RunConfig::Sanity(a) => sanity(a, config),
        RunConfig::Theory(a) => theory(a, config),
        RunConfig::Meta(a) => meta(a, config),
    }
}

fn load_inputs(
    input: &crate::args::InputArgs,
) -> Result<(Vec<ActivationVector>, Vec<ConceptVector>), Failure> {
    let a = read_matrix(&input.activations, input.input_format).invalid()?;
    let c = read_matrix(&input.concepts, input.input_format).invalid()?;
    if a.rows() != c.rows() {
        return Err(Failure::Validation(anyhow!(
            "incompatible matrix shapes: {} activation rows vs {} concept rows",
            a.rows(),
            c.rows()
        )));
    }
    Ok((a.activations().invalid()?, c.concepts().invalid()?))
}

fn validated(specs: Vec<MetricSpec>) -> Result<Vec<MetricSpec>, Failure> {
    for s in &specs {
        s.validate().invalid()?;
    }
    Ok(specs)
}

fn serialize_report<T: Serialize>(
    format: OutputFormat,
    report: &T,
    config: &RunConfig,
    header: &[&str],
    rows: impl FnOnce() -> Vec<Vec<String>>,
) -> Result<String, Failure> {
    match format {
        OutputFormat::Json => report::json(report),
        OutputFormat::Csv => report::csv(config, header, &rows()),
    }
    .runtime()
}

#[derive(Serialize)]
struct Report<'a, T> {
    config: &'a RunConfig,
    results: &'a [T],
}

#[derive(Serialize)]
struct ScoreTable {
    spec: MetricSpec,
    neuron_ids: Vec<String>,
    concept_ids: Vec<String>,
    /// `raw[k][t]`; `None` where the score is undefined.
    raw: Vec<Vec<Option<f64>>>,
    normalized: Vec<Vec<Option<f64>>>,
    /// Reasons for undefined cells, keyed by neuron then concept.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    errors: BTreeMap<String, BTreeMap<String, String>>,
}

fn score_table(
    spec: &MetricSpec,
    acts: &[ActivationVector],
    concepts: &[ConceptVector],
) -> ScoreTable {
    let cells: Vec<Vec<neuroneval::Result<Score>>> = acts
        .par_iter()
        .map(|a| {
            concepts
                .iter()
                .map(|c| metrics::score(spec, a, c))
                .collect()
        })
        .collect();
    let mut defined: Vec<Score> = cells
        .iter()
        .flatten()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    metrics::normalize_batch(spec.metric, &mut defined);
    let mut normalized_iter = defined.into_iter();
    let mut raw = Vec::with_capacity(acts.len());
    let mut normalized = Vec::with_capacity(acts.len());
    let mut errors = BTreeMap::new();
    for (a, row) in acts.iter().zip(cells) {
        let mut raw_row = Vec::with_capacity(concepts.len());
        let mut norm_row = Vec::with_capacity(concepts.len());
        for (c, cell) in concepts.iter().zip(row) {
            match cell {
                Ok(s) => {
                    let n = normalized_iter
                        .next()
                        .expect("one normalized score per defined cell");
                    raw_row.push(Some(s.raw));
                    norm_row.push(Some(n.normalized));
                }
                Err(e) => {
                    raw_row.push(None);
                    norm_row.push(None);
                    errors
                        .entry(a.id().to_string())
                        .or_insert_with(BTreeMap::new)
                        .insert(c.id().to_string(), e.to_string());
                }
            }
        }
        raw.push(raw_row);
        normalized.push(norm_row);
    }
    ScoreTable {
        spec: *spec,
        neuron_ids: acts.iter().map(|a| a.id().to_string()).collect(),
        concept_ids: concepts.iter().map(|c| c.id().to_string()).collect(),
        raw,
        normalized,
        errors,
    }
}

fn score(args: &ScoreArgs, config: &RunConfig) -> Result<Rendered, Failure> {
    let (acts, concepts) = load_inputs(&args.input)?;
    let specs = validated(args.metric.specs(args.alpha, args.seed))?;
    let results: Vec<ScoreTable> = specs
        .iter()
        .map(|s| score_table(s, &acts, &concepts))
        .collect();
    let any_ok = results
        .iter()
        .any(|t| t.raw.iter().flatten().any(Option::is_some));
    let rows = || {
        let mut rows = Vec::new();
        for t in &results {
            for (k, unit) in t.neuron_ids.iter().enumerate() {
                for (j, concept) in t.concept_ids.iter().enumerate() {
                    let error = t
                        .errors
                        .get(unit)
                        .and_then(|m| m.get(concept))
                        .cloned()
                        .unwrap_or_default();
                    rows.push(vec![
                        t.spec.metric.to_string(),
                        unit.clone(),
                        concept.clone(),
                        opt_num(t.raw[k][j]),
                        opt_num(t.normalized[k][j]),
                        error,
                    ]);
                }
            }
        }
        rows
    };
    let header = [
        "metric",
        "unit_id",
        "concept_id",
        "raw",
        "normalized",
        "error",
    ];
    let report = serialize_report(
        args.output.format,
        &Report {
            config,
            results: &results,
        },
        config,
        &header,
        rows,
    )?;
    Ok(Rendered {
        report,
        curve: None,
        any_ok,
    })
}

#[derive(Serialize)]
struct SanityEntry {
    metric: Metric,
    test: PerturbKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<SanityResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn sanity(args: &SanityArgs, config: &RunConfig) -> Result<Rendered, Failure> {
    let (acts, concepts) = load_inputs(&args.input)?;
    let truth = matrix::read_pairs(&args.truth).invalid()?;
    let by_id: BTreeMap<&str, &ConceptVector> = concepts.iter().map(|c| (c.id(), c)).collect();
    let act_ids: BTreeMap<&str, &ActivationVector> = acts.iter().map(|a| (a.id(), a)).collect();
    for (unit, concept) in &truth {
        if !act_ids.contains_key(unit.as_str()) {
            return Err(Failure::Validation(anyhow!(
                "truth map names unknown unit '{unit}'"
            )));
        }
        if !by_id.contains_key(concept.as_str()) {
            return Err(Failure::Validation(anyhow!(
                "truth map names unknown concept '{concept}'"
            )));
        }
    }
    let cases: Vec<SanityCase> = acts
        .iter()
        .filter_map(|a| {
            truth
                .get(a.id())
                .map(|t| SanityCase::new(a.clone(), by_id[t.as_str()].clone()))
        })
        .collect();
    if cases.is_empty() {
        return Err(Failure::Validation(anyhow!("truth map covers no neuron")));
    }

    let supplied_cases = if args.tests.contains(&TestKind::Supplied) {
        let map_path = args.supplied_map.as_ref().ok_or_else(|| {
            Failure::Validation(anyhow!("the supplied test needs --supplied-map"))
        })?;
        let map = matrix::read_pairs(map_path).invalid()?;
        let pool = match &args.supplied {
            Some(p) => {
                let m = read_matrix(p, args.input.input_format).invalid()?;
                if m.rows() != acts[0].len() {
                    return Err(Failure::Validation(anyhow!(
                        "incompatible matrix shapes: {} supplied rows vs {} activation rows",
                        m.rows(),
                        acts[0].len()
                    )));
                }
                m.concepts().invalid()?
            }
            None => concepts.clone(),
        };
        let pool: BTreeMap<&str, &ConceptVector> = pool.iter().map(|c| (c.id(), c)).collect();
        let mut out = Vec::new();
        for case in &cases {
            if let Some(s) = map.get(case.activation.id()) {
                let c = pool.get(s.as_str()).ok_or_else(|| {
                    Failure::Validation(anyhow!("supplied map names unknown concept '{s}'"))
                })?;
                out.push(case.clone().with_supplied((*c).clone()));
            }
        }
        if out.is_empty() {
            return Err(Failure::Validation(anyhow!(
                "supplied map covers no neuron of the truth map"
            )));
        }
        out
    } else {
        Vec::new()
    };

    let specs = validated(args.metric.specs(args.alpha, args.seed))?;
    let base = PerturbSpec::missing()
        .with_p(args.p)
        .with_r_plus(args.r_plus)
        .with_trials(args.trials)
        .with_seed(args.seed);
    base.validate().invalid()?;
    if !(args.epsilon >= 0.0 && args.epsilon.is_finite()) {
        return Err(Failure::Validation(anyhow!(
            "epsilon must be non-negative, got {}",
            args.epsilon
        )));
    }

    let mut results = Vec::new();
    for spec in &specs {
        for &test in &args.tests {
            let perturb = PerturbSpec {
                kind: test.into(),
                ..base.clone()
            };
            let cases = if test == TestKind::Supplied {
                &supplied_cases
            } else {
                &cases
            };
            let outcome = perturbation::sanity_test(spec, cases, &perturb, args.epsilon);
            results.push(SanityEntry {
                metric: spec.metric,
                test: perturb.kind,
                error: outcome.as_ref().err().map(ToString::to_string),
                result: outcome.ok(),
            });
        }
    }
    let any_ok = results.iter().any(|e| e.result.is_some());
    let rows = || {
        let mut rows = Vec::new();
        for e in &results {
            let head = [e.metric.to_string(), e.test.name().to_string()];
            match (&e.result, &e.error) {
                (Some(r), _) => {
                    for (unit, d) in &r.per_neuron_delta {
                        rows.push(
                            [
                                head.to_vec(),
                                vec![unit.clone(), num(*d), num(r.decrease_acc), String::new()],
                            ]
                            .concat(),
                        );
                    }
                    for (unit, why) in &r.skipped {
                        rows.push(
                            [
                                head.to_vec(),
                                vec![
                                    unit.clone(),
                                    String::new(),
                                    num(r.decrease_acc),
                                    why.clone(),
                                ],
                            ]
                            .concat(),
                        );
                    }
                }
                (None, err) => {
                    rows.push(
                        [
                            head.to_vec(),
                            vec![
                                String::new(),
                                String::new(),
                                String::new(),
                                err.clone().unwrap_or_default(),
                            ],
                        ]
                        .concat(),
                    );
                }
            }
        }
        rows
    };
    let header = [
        "metric",
        "test",
        "unit_id",
        "delta_s",
        "decrease_acc",
        "note",
    ];
    let report = serialize_report(
        args.output.format,
        &Report {
            config,
            results: &results,
        },
        config,
        &header,
        rows,
    )?;
    Ok(Rendered {
        report,
        curve: None,
        any_ok,
    })
}

pub const CURVE_HEADER: [&str; 9] = [
    "metric",
    "gamma",
    "test",
    "delta_s_mc",
    "delta_s_analytic",
    "decrease_acc",
    "stderr",
    "trials",
    "skipped",
];

fn curve_rows(rows: &[SuiteRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.metric.to_string(),
                num(r.gamma),
                r.test.name().to_string(),
                num(r.delta_s_mc),
                opt_num(r.delta_s_analytic),
                num(r.decrease_acc),
                num(r.stderr),
                r.trials.to_string(),
                r.skipped.to_string(),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct TheoryReport<'a> {
    config: &'a RunConfig,
    rows: &'a [SuiteRow],
}

fn theory(args: &TheoryArgs, config: &RunConfig) -> Result<Rendered, Failure> {
    let tc = TheoryConfig {
        metrics: validated(args.metric.specs(metrics::DEFAULT_ALPHA, args.seed))?,
        gammas: args.gammas.clone(),
        n: args.n,
        trials: args.trials,
        epsilon: args.epsilon,
        p: args.p,
        r_plus: args.r_plus,
        seed: args.seed,
    };
    tc.validate().invalid()?;
    let rows = theory::theoretical_suite(&tc).runtime()?;
    let curve = report::csv(config, &CURVE_HEADER, &curve_rows(&rows)).runtime()?;
    let report = match args.output.format {
        OutputFormat::Json => report::json(&TheoryReport {
            config,
            rows: &rows,
        })
        .runtime()?,
        OutputFormat::Csv => curve.clone(),
    };
    Ok(Rendered {
        report,
        curve: Some(curve),
        any_ok: rows.iter().any(|r| r.skipped < r.trials),
    })
}

#[derive(Serialize)]
struct MetaEntry {
    metric: Metric,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta_auprc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Rank among the metrics that produced a result; 1 is best.
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<MetaResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn meta(args: &MetaArgs, config: &RunConfig) -> Result<Rendered, Failure> {
    let (acts, concepts) = load_inputs(&args.input)?;
    let truth = matrix::read_pairs(&args.truth).invalid()?;
    let setting = KnownConceptSetting::new(args.name.clone(), acts, concepts, truth).invalid()?;
    let mc = MetaConfig {
        alpha_grid: args.alpha_grid.clone(),
        val_frac: args.val_frac,
        seed: args.seed,
    };
    if mc.alpha_grid.is_empty() {
        return Err(Failure::Validation(anyhow!("empty alpha grid")));
    }
    metaeval::split_neurons(&setting, mc.val_frac, mc.seed).invalid()?;
    let mut specs = Vec::new();
    for base in args.metric.specs(metrics::DEFAULT_ALPHA, args.seed) {
        for &alpha in &mc.alpha_grid {
            base.with_alpha(alpha).validate().invalid()?;
        }
        specs.push(base);
    }

    let outcomes: Vec<_> = specs
        .iter()
        .map(|s| metaeval::meta_evaluate(&setting, s, &mc))
        .collect();
    let table: Vec<(Metric, Vec<f64>)> = outcomes
        .iter()
        .filter_map(|o| {
            o.as_ref()
                .ok()
                .map(|r| (r.metric.metric, vec![r.meta_auprc]))
        })
        .collect();
    let ranks: BTreeMap<String, f64> = if table.is_empty() {
        BTreeMap::new()
    } else {
        metaeval::average_rank(&table)
            .runtime()?
            .into_iter()
            .map(|(m, r)| (m.to_string(), r))
            .collect()
    };
    let results: Vec<MetaEntry> = specs
        .iter()
        .zip(outcomes)
        .map(|(spec, outcome)| match outcome {
            Ok(r) => MetaEntry {
                metric: spec.metric,
                meta_auprc: Some(r.meta_auprc),
                alpha: spec.metric.uses_alpha().then_some(r.metric.alpha),
                rank: ranks.get(&spec.metric.to_string()).copied(),
                result: Some(r),
                error: None,
            },
            Err(e) => MetaEntry {
                metric: spec.metric,
                meta_auprc: None,
                alpha: None,
                rank: None,
                result: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let any_ok = !table.is_empty();
    let rows = || {
        results
            .iter()
            .map(|e| {
                vec![
                    e.metric.to_string(),
                    opt_num(e.meta_auprc),
                    opt_num(e.alpha),
                    opt_num(e.rank),
                    e.error.clone().unwrap_or_default(),
                ]
            })
            .collect()
    };
    let header = ["metric", "meta_auprc", "alpha", "rank", "error"];
    let report = serialize_report(
        args.output.format,
        &Report {
            config,
            results: &results,
        },
        config,
        &header,
        rows,
    )?;
    Ok(Rendered {
        report,
        curve: None,
        any_ok,
    })
}
