//! Sanity tests on ideal neurons, by simulation and in closed form.
//!
//! An ideal neuron's binary activations equal its concept's labels exactly,
//! so any reliable metric must lose score when labels are removed or added.
//! For the seven confusion-matrix metrics the expected perturbed score has a
//! closed form in the population rates of the four confusion cells.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::metrics::{self, BaseMetric, Metric, MetricSpec, Score};
use crate::perturbation::{self, PerturbKind, PerturbSpec};
use crate::rng;
use crate::vectors::{ActivationVector, BinaryVector, ConceptVector};

/// Activation frequencies swept by default.
pub const DEFAULT_GAMMAS: [f64; 5] = [0.499, 0.1, 0.01, 0.001, 0.0001];
pub const DEFAULT_N: usize = 100_000;
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct IdealNeuron {
    pub gamma: f64,
    pub n: usize,
    pub bits: BinaryVector,
}

impl IdealNeuron {
    pub fn activation(&self, id: &str) -> ActivationVector {
        ActivationVector::from_binary(id, &self.bits).expect("n >= 2 checked on construction")
    }

    pub fn concept(&self, id: &str) -> ConceptVector {
        ConceptVector::from_binary(id, &self.bits).expect("binary values are in range")
    }
}

/// Binary neuron with exactly `round(gamma * n)` ones at random positions;
/// its concept is the same vector.
pub fn simulate_ideal(gamma: f64, n: usize, seed: u64) -> Result<IdealNeuron> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(EvalError::InvalidParameter(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    if n < 2 {
        return Err(EvalError::TooShort(n));
    }
    if gamma * (n as f64) < 0.5 {
        return Err(EvalError::FrequencyTooLow { gamma, n });
    }
    let k = (gamma * n as f64).round() as usize;
    let mut rng = rng::stream(seed, &["ideal-neuron".into()]);
    let mut bits = vec![false; n];
    for i in index::sample(&mut rng, n, k) {
        bits[i] = true;
    }
    Ok(IdealNeuron {
        gamma,
        n,
        bits: BinaryVector::new(bits),
    })
}

/// Population rates of the confusion cells: `gamma` (neuron and concept on),
/// `b` (neuron only), `eta` (concept only) and `d` (neither).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub gamma: f64,
    pub b: f64,
    pub eta: f64,
    pub d: f64,
}

impl ConfusionRates {
    pub fn new(gamma: f64, b: f64, eta: f64, d: f64) -> Result<Self> {
        let r = Self { gamma, b, eta, d };
        if [gamma, b, eta, d]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(EvalError::InvalidParameter(format!(
                "negative or non-finite rate in {r:?}"
            )));
        }
        if (gamma + b + eta + d - 1.0).abs() > 1e-12 {
            return Err(EvalError::InvalidParameter(format!(
                "rates must sum to 1, got {r:?}"
            )));
        }
        Ok(r)
    }

    /// Rates of an ideal neuron: no off-diagonal mass.
    pub fn ideal(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0, 0.0, 1.0 - gamma)
    }
}

/// Analytical perturbation, parameterized as in the closed forms: Missing
/// drops each positive label with probability `p`; Extra turns each negative
/// on with probability `q = p (gamma + eta) / (b + d)`, so `p = 1` doubles the
/// expected number of positives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticPerturbation {
    Missing(f64),
    Extra(f64),
}

/// Value of a confusion-matrix metric from expected cell masses.
fn cell_metric(metric: BaseMetric, tp: f64, fn_: f64, fp: f64, tn: f64) -> Result<f64> {
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(EvalError::DegenerateConfusion)
        }
    };
    match metric {
        BaseMetric::Recall => ratio(tp, tp + fn_),
        BaseMetric::Precision => ratio(tp, tp + fp),
        BaseMetric::F1 => ratio(2.0 * tp, 2.0 * tp + fp + fn_),
        BaseMetric::IoU => ratio(tp, tp + fp + fn_),
        BaseMetric::Accuracy => ratio(tp + tn, tp + tn + fp + fn_),
        BaseMetric::BalancedAcc => Ok(ratio(tp, tp + fn_)? / 2.0 + ratio(tn, tn + fp)? / 2.0),
        BaseMetric::InverseBalancedAcc => {
            Ok(ratio(tp, tp + fp)? / 2.0 + ratio(tn, tn + fn_)? / 2.0)
        }
        other => Err(EvalError::InvalidParameter(format!(
            "{other} has no closed form"
        ))),
    }
}

/// Closed-form score of a binary metric on unperturbed rates.
pub fn analytical_score(metric: BaseMetric, rates: &ConfusionRates) -> Result<f64> {
    let ConfusionRates { gamma, b, eta, d } = *rates;
    cell_metric(metric, gamma, b, eta, d)
}

/// Closed-form expected score of a binary metric after perturbing the concept.
pub fn analytical_perturbed(
    metric: BaseMetric,
    rates: &ConfusionRates,
    kind: AnalyticPerturbation,
) -> Result<f64> {
    let ConfusionRates { gamma, b, eta, d } = *rates;
    match kind {
        AnalyticPerturbation::Missing(p) => {
            check_probability(p)?;
            cell_metric(
                metric,
                (1.0 - p) * gamma,
                b + p * gamma,
                (1.0 - p) * eta,
                d + p * eta,
            )
        }
        AnalyticPerturbation::Extra(p) => {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(EvalError::InvalidParameter(format!(
                    "p must be non-negative, got {p}"
                )));
            }
            if b + d <= 0.0 {
                return Err(EvalError::DegenerateConfusion);
            }
            let q = p * (gamma + eta) / (b + d);
            if q > 1.0 {
                return Err(EvalError::InvalidParameter(format!(
                    "extra-labels flip probability {q} exceeds 1"
                )));
            }
            cell_metric(
                metric,
                gamma + q * b,
                (1.0 - q) * b,
                eta + q * d,
                (1.0 - q) * d,
            )
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(EvalError::InvalidParameter(format!(
            "p must lie in [0,1], got {p}"
        )))
    }
}

/// Closed-form score change, or `None` if the metric has no closed form.
fn analytic_delta(
    metric: Metric,
    rates: &ConfusionRates,
    kind: AnalyticPerturbation,
) -> Option<f64> {
    let one = |m: BaseMetric| -> Option<(f64, f64)> {
        if !m.is_binary() {
            return None;
        }
        Some((
            analytical_score(m, rates).ok()?,
            analytical_perturbed(m, rates, kind).ok()?,
        ))
    };
    match metric {
        Metric::Base(m) => one(m).map(|(before, after)| after - before),
        Metric::Harmonic(x, y) => {
            let (bx, ax) = one(x)?;
            let (by, ay) = one(y)?;
            Some(metrics::harmonic_combine(ax, ay) - metrics::harmonic_combine(bx, by))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConfig {
    /// Binarization fractions are replaced by each neuron's own frequency.
    pub metrics: Vec<MetricSpec>,
    pub gammas: Vec<f64>,
    pub n: usize,
    pub trials: usize,
    pub epsilon: f64,
    /// Missing-labels drop probability.
    pub p: f64,
    /// Extra-labels target ratio.
    pub r_plus: f64,
    pub seed: u64,
}

impl TheoryConfig {
    pub fn new(metrics: Vec<MetricSpec>) -> Self {
        Self {
            metrics,
            gammas: DEFAULT_GAMMAS.to_vec(),
            n: DEFAULT_N,
            trials: DEFAULT_TRIALS,
            epsilon: perturbation::DEFAULT_EPSILON,
            p: 0.5,
            r_plus: 2.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(EvalError::InvalidParameter("no metrics given".into()));
        }
        for m in &self.metrics {
            m.validate()?;
        }
        if self.gammas.is_empty() {
            return Err(EvalError::InvalidParameter("empty gamma grid".into()));
        }
        if self.trials == 0 {
            return Err(EvalError::InvalidParameter(
                "trials must be at least 1".into(),
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(EvalError::InvalidParameter(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        PerturbSpec::missing()
            .with_p(self.p)
            .with_r_plus(self.r_plus)
            .validate()?;
        for &g in &self.gammas {
            if !(g > 0.0 && g < 1.0) {
                return Err(EvalError::InvalidParameter(format!(
                    "gamma must lie in (0,1), got {g}"
                )));
            }
            if g * (self.n as f64) < 0.5 {
                return Err(EvalError::FrequencyTooLow {
                    gamma: g,
                    n: self.n,
                });
            }
        }
        Ok(())
    }
}

/// One cell of the theoretical suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub metric: Metric,
    pub gamma: f64,
    pub test: PerturbKind,
    /// Mean score difference over the trials that produced a score.
    pub delta_s_mc: f64,
    pub delta_s_analytic: Option<f64>,
    pub decrease_acc: f64,
    /// Standard error of `delta_s_mc`.
    pub stderr: f64,
    pub trials: usize,
    pub skipped: usize,
}

impl SuiteRow {
    /// `|MC - analytic|`, when a closed form exists.
    pub fn analytic_gap(&self) -> Option<f64> {
        self.delta_s_analytic.map(|a| (self.delta_s_mc - a).abs())
    }
}

/// Scores of one metric on one simulated neuron.
#[derive(Debug, Clone, Copy)]
struct TrialScores {
    original: Option<Score>,
    missing: Option<Score>,
    extra: Option<Score>,
}

fn unit_id(gamma_index: usize, trial: usize) -> String {
    format!("ideal-{gamma_index}-{trial}")
}

fn run_trial(config: &TheoryConfig, gamma_index: usize, trial: usize) -> Result<Vec<TrialScores>> {
    let gamma = config.gammas[gamma_index];
    let seed = rng::derive_seed(
        config.seed,
        &["theory".into(), gamma_index.into(), trial.into()],
    );
    let neuron = simulate_ideal(gamma, config.n, seed)?;
    let id = unit_id(gamma_index, trial);
    let a = neuron.activation(&id);
    let c = neuron.concept(&id);
    let alpha = neuron.bits.popcount() as f64 / config.n as f64;

    let missing_spec = PerturbSpec::missing()
        .with_p(config.p)
        .with_seed(config.seed);
    let extra_spec = PerturbSpec::extra()
        .with_r_plus(config.r_plus)
        .with_seed(config.seed);
    let c_missing = perturbation::perturbed(&c, &missing_spec, &id, 0).ok();
    let c_extra = perturbation::perturbed(&c, &extra_spec, &id, 0).ok();

    Ok(config
        .metrics
        .iter()
        .map(|spec| {
            let spec = spec.with_alpha(alpha);
            let score =
                |cv: Option<&ConceptVector>| cv.and_then(|cv| metrics::score(&spec, &a, cv).ok());
            TrialScores {
                original: score(Some(&c)),
                missing: score(c_missing.as_ref()),
                extra: score(c_extra.as_ref()),
            }
        })
        .collect())
}

fn summarize(
    metric: &MetricSpec,
    gamma: f64,
    test: PerturbKind,
    pairs: Vec<Option<(Score, Score)>>,
    epsilon: f64,
    analytic: Option<f64>,
) -> SuiteRow {
    let trials = pairs.len();
    let mut scored: Vec<(Score, Score)> = pairs.into_iter().flatten().collect();
    let skipped = trials - scored.len();
    let mut pooled: Vec<Score> = scored.iter().flat_map(|(o, p)| [*o, *p]).collect();
    metrics::normalize_batch(metric.metric, &mut pooled);
    for (pair, chunk) in scored.iter_mut().zip(pooled.chunks(2)) {
        *pair = (chunk[0], chunk[1]);
    }
    let deltas: Vec<f64> = scored
        .iter()
        .map(|(o, p)| p.normalized - o.normalized)
        .collect();
    let m = deltas.len();
    let (mean, stderr, decrease) = if m == 0 {
        (f64::NAN, f64::NAN, 0.0)
    } else {
        let mean = deltas.iter().sum::<f64>() / m as f64;
        let var = if m > 1 {
            deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1) as f64
        } else {
            0.0
        };
        let hits = deltas.iter().filter(|&&d| d < -epsilon).count();
        (mean, (var / m as f64).sqrt(), hits as f64 / m as f64)
    };
    SuiteRow {
        metric: metric.metric,
        gamma,
        test,
        delta_s_mc: mean,
        delta_s_analytic: analytic,
        decrease_acc: decrease,
        stderr,
        trials,
        skipped,
    }
}

/// Monte-Carlo Missing and Extra labels tests on ideal neurons for every
/// metric and frequency, with closed-form differences where they exist.
///
/// Each trial is one simulated neuron, so Decrease Acc is the fraction of
/// trials whose score dropped by more than `epsilon`. Rows come out ordered
/// by metric, then frequency, then test (missing before extra).
pub fn theoretical_suite(config: &TheoryConfig) -> Result<Vec<SuiteRow>> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.gammas.len())
        .flat_map(|g| (0..config.trials).map(move |t| (g, t)))
        .collect();
    let results: Vec<Vec<TrialScores>> = jobs
        .par_iter()
        .map(|&(g, t)| run_trial(config, g, t))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (mi, spec) in config.metrics.iter().enumerate() {
        for (gi, &gamma) in config.gammas.iter().enumerate() {
            let trials = &results[gi * config.trials..(gi + 1) * config.trials];
            let rates = ConfusionRates::ideal(gamma)?;
            for test in [PerturbKind::Missing, PerturbKind::Extra] {
                let kind = match test {
                    PerturbKind::Missing => AnalyticPerturbation::Missing(config.p),
                    _ => AnalyticPerturbation::Extra(config.r_plus - 1.0),
                };
                let pairs = trials
                    .iter()
                    .map(|t| {
                        let s = t[mi];
                        let after = if test == PerturbKind::Missing {
                            s.missing
                        } else {
                            s.extra
                        };
                        s.original.zip(after)
                    })
                    .collect();
                let analytic = analytic_delta(spec.metric, &rates, kind);
                rows.push(summarize(
                    spec,
                    gamma,
                    test,
                    pairs,
                    config.epsilon,
                    analytic,
                ));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_neuron_popcounts() {
        assert_eq!(
            simulate_ideal(0.01, 10_000, 1).unwrap().bits.popcount(),
            100
        );
        assert_eq!(
            simulate_ideal(0.499, 500_000, 1).unwrap().bits.popcount(),
            249_500
        );
        assert_eq!(
            simulate_ideal(0.1, 1000, 4).unwrap(),
            simulate_ideal(0.1, 1000, 4).unwrap()
        );
        assert_ne!(
            simulate_ideal(0.1, 1000, 4).unwrap(),
            simulate_ideal(0.1, 1000, 5).unwrap()
        );
        assert_eq!(
            simulate_ideal(0.0001, 1000, 0),
            Err(EvalError::FrequencyTooLow {
                gamma: 0.0001,
                n: 1000
            })
        );
    }

    #[test]
    fn rates_must_sum_to_one() {
        assert!(ConfusionRates::new(0.2, 0.1, 0.1, 0.5).is_err());
        assert!(ConfusionRates::new(0.2, 0.1, 0.1, 0.6).is_ok());
    }

    #[test]
    fn zero_probability_is_identity() {
        let rates = ConfusionRates::new(0.2, 0.05, 0.1, 0.65).unwrap();
        for m in BaseMetric::BINARY {
            let before = analytical_score(m, &rates).unwrap();
            for kind in [
                AnalyticPerturbation::Missing(0.0),
                AnalyticPerturbation::Extra(0.0),
            ] {
                let after = analytical_perturbed(m, &rates, kind).unwrap();
                assert!((after - before).abs() < 1e-15, "{m}");
            }
        }
    }

    #[test]
    fn ideal_cells() {
        let rates = ConfusionRates::ideal(0.499).unwrap();
        let recall = analytical_perturbed(
            BaseMetric::Recall,
            &rates,
            AnalyticPerturbation::Missing(0.5),
        )
        .unwrap();
        assert!((recall - 0.5).abs() < 1e-15);
        let f1 =
            analytical_perturbed(BaseMetric::F1, &rates, AnalyticPerturbation::Extra(1.0)).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        let iba = analytical_perturbed(
            BaseMetric::InverseBalancedAcc,
            &rates,
            AnalyticPerturbation::Missing(0.5),
        )
        .unwrap();
        assert!((iba - 1.0 + 0.1662).abs() < 5e-5);
    }

    #[test]
    fn degenerate_rates() {
        let rates = ConfusionRates::new(0.0, 0.0, 0.3, 0.7).unwrap();
        assert_eq!(
            analytical_perturbed(
                BaseMetric::Recall,
                &rates,
                AnalyticPerturbation::Missing(0.5)
            ),
            Err(EvalError::DegenerateConfusion)
        );
        let full = ConfusionRates::new(0.6, 0.0, 0.4, 0.0).unwrap();
        assert_eq!(
            analytical_perturbed(BaseMetric::F1, &full, AnalyticPerturbation::Extra(1.0)),
            Err(EvalError::DegenerateConfusion)
        );
    }

    #[test]
    fn closed_form_matches_simulation_on_non_ideal_neurons() {
        // Build a neuron with all four cells populated and compare the mean
        // perturbed confusion score against the closed form.
        let n = 20_000;
        let cells = [(0.1, true, true), (0.05, true, false), (0.15, false, true)];
        let mut a = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let mut i = 0;
        for (frac, av, cv) in cells {
            for _ in 0..(frac * n as f64) as usize {
                a.push(av);
                c.push(cv);
                i += 1;
            }
        }
        while i < n {
            a.push(false);
            c.push(false);
            i += 1;
        }
        let a = BinaryVector::new(a);
        let c = ConceptVector::from_binary("c", &BinaryVector::new(c)).unwrap();
        let rates = ConfusionRates::new(0.1, 0.05, 0.15, 0.7).unwrap();
        for (kind, spec) in [
            (AnalyticPerturbation::Missing(0.5), PerturbSpec::missing()),
            (AnalyticPerturbation::Extra(1.0), PerturbSpec::extra()),
        ] {
            let trials = 200;
            let sims: Vec<crate::metrics::ConfusionCounts> = (0..trials)
                .map(|t| {
                    let cp = perturbation::perturbed(&c, &spec, "u", t).unwrap();
                    metrics::confusion(&a, &cp.binarized()).unwrap()
                })
                .collect();
            for m in BaseMetric::BINARY {
                let values: Vec<f64> = sims.iter().map(|cc| cc.metric(m).unwrap()).collect();
                let mean = values.iter().sum::<f64>() / trials as f64;
                let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (trials - 1) as f64)
                    .sqrt();
                let exact = analytical_perturbed(m, &rates, kind).unwrap();
                // ratio estimators carry an O(1/n) bias on top of sampling noise
                let tol = 4.0 * sd / (trials as f64).sqrt() + 1e-3;
                assert!(
                    (mean - exact).abs() < tol,
                    "{m} {kind:?}: {mean} vs {exact}"
                );
            }
        }
    }

    fn small_config(metrics: &[BaseMetric]) -> TheoryConfig {
        TheoryConfig {
            gammas: vec![0.2, 0.02],
            n: 5_000,
            trials: 8,
            ..TheoryConfig::new(metrics.iter().map(|&m| MetricSpec::new(m)).collect())
        }
    }

    #[test]
    fn suite_rows_and_sign_laws() {
        let config = small_config(&BaseMetric::BINARY);
        let rows = theoretical_suite(&config).unwrap();
        assert_eq!(rows.len(), 7 * 2 * 2);
        for r in &rows {
            assert!(r.delta_s_analytic.is_some());
            let is = |m: BaseMetric| r.metric == Metric::Base(m);
            match r.test {
                PerturbKind::Missing if is(BaseMetric::Precision) => assert_eq!(r.delta_s_mc, 0.0),
                PerturbKind::Extra if is(BaseMetric::Recall) => assert_eq!(r.delta_s_mc, 0.0),
                _ => assert!(r.delta_s_mc <= 0.0, "{r:?}"),
            }
        }
    }

    #[test]
    fn suite_is_deterministic_across_thread_counts() {
        let config = small_config(&[BaseMetric::Correlation, BaseMetric::Wpmi, BaseMetric::Auprc]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| theoretical_suite(&config).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        let mut other = config.clone();
        other.seed = 1;
        assert_ne!(one, theoretical_suite(&other).unwrap());
    }

    #[test]
    fn disjoint_seed_batches_agree() {
        let mut config =
            small_config(&[BaseMetric::Correlation, BaseMetric::Auc, BaseMetric::Cosine]);
        config.trials = 30;
        let a = theoretical_suite(&config).unwrap();
        config.seed = 99;
        let b = theoretical_suite(&config).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let se = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
            assert!(
                (x.delta_s_mc - y.delta_s_mc).abs() <= 3.0 * se + 1e-12,
                "{x:?} vs {y:?}"
            );
        }
    }

    #[test]
    fn invalid_grid() {
        let mut config = small_config(&[BaseMetric::Recall]);
        config.gammas = vec![1e-5];
        assert!(matches!(
            theoretical_suite(&config),
            Err(EvalError::FrequencyTooLow { .. })
        ));
    }
}
