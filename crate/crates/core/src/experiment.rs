//! Seeded experiment runs: configuration, per-trial execution, complexity
//! sweeps, dataset export and the versioned report formats.
//!
//! Reports are JSON Lines. The first line is a header carrying
//! [`SCHEMA_VERSION`]; readers reject any other version. Every run is a pure
//! function of its resolved configuration, so equal configurations produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grover::{GroverBackend, GroverConfig};
use crate::kernel::{self, kernel_exact, kernel_sampled, KernelMode};
use crate::learn::{
    self, accuracy, balanced_test_set, generate_dataset, Concept, LabelRule, LearnerKind,
    LearnerOutcome, SvmSettings, SweepParams, SweepRow,
};
use crate::ledger::QueryLedger;
use crate::pattern::{self, format_bits, matcher_ledger, PatternLedger, TextInstance};
use crate::seed::derive_seed;
use crate::stats::{loglog_fit, mean, mean_ci, LogLogFit};
use crate::svm::{self, Label};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable bounding the trial worker pool.
pub const WORKERS_ENV: &str = "QSVM_WORKERS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    #[default]
    Indicator,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// A value or the keyword `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Auto(AutoKeyword),
}

impl<T> Default for AutoOr<T> {
    fn default() -> Self {
        AutoOr::Auto(AutoKeyword::Auto)
    }
}

impl<T: Copy> AutoOr<T> {
    pub fn resolve(self, auto: impl FnOnce() -> T) -> T {
        match self {
            AutoOr::Value(v) => v,
            AutoOr::Auto(_) => auto(),
        }
    }
}

fn default_m() -> usize {
    16
}
fn default_c() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-6
}
fn default_trials() -> usize {
    1
}
fn default_test_points() -> usize {
    200
}
fn default_classical_fraction() -> f64 {
    0.49
}
fn default_sweep() -> Vec<usize> {
    (4..=14).map(|e| 1usize << e).collect()
}

/// Experiment configuration as written in the TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: Problem,
    #[serde(rename = "N")]
    pub domain_size: usize,
    /// Interval width; `"auto"` picks the coverage default.
    #[serde(rename = "M", default)]
    pub width: AutoOr<usize>,
    #[serde(default = "default_m")]
    pub m: usize,
    /// Shots per kernel estimate; `"auto"` is `m⁴`.
    #[serde(rename = "R", default)]
    pub shots: AutoOr<u64>,
    #[serde(rename = "C", default = "default_c")]
    pub c: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub backend: GroverBackend,
    #[serde(default = "default_learner")]
    pub learner: LearnerKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_test_points")]
    pub test_points: usize,
    /// Fixed concept; drawn per trial when absent.
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub label_rule: LabelRule,
    /// Classical probe budget; `"auto"` is `⌈classical_fraction · N⌉`.
    #[serde(rename = "X", default)]
    pub budget: AutoOr<usize>,
    #[serde(default = "default_classical_fraction")]
    pub classical_fraction: f64,
    /// Pattern length; `"auto"` is `2 log₂N`.
    #[serde(rename = "L", default)]
    pub pattern_length: AutoOr<usize>,
    /// Pattern bits; drawn from the seed when absent.
    #[serde(default)]
    pub pattern: Option<String>,
    #[serde(rename = "sweep_N", default = "default_sweep")]
    pub sweep_sizes: Vec<usize>,
    #[serde(default)]
    pub learners: Option<Vec<LearnerKind>>,
}

fn default_learner() -> LearnerKind {
    LearnerKind::QuantumKernel
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn override_value(value: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {value}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies `key=value` overrides in order and
    /// validates the result.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            table.insert(key.clone(), override_value(value));
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.resolve()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.resolve()?;
        Ok(config)
    }

    /// Fills every `"auto"` field and checks ranges.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let n = self.domain_size;
        if !(n.is_power_of_two() && n >= 8) {
            return Err(Error::Config(format!("N = {n} must be a power of two >= 8")));
        }
        if self.m < 2 || self.m > n {
            return Err(Error::Config(format!("m = {} must lie in 2..=N", self.m)));
        }
        if self.trials == 0 || self.test_points == 0 {
            return Err(Error::Config("trials and test_points must be positive".into()));
        }
        if !(self.c.is_finite() && self.c > 0.0) || self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config("C and tol must be positive".into()));
        }
        if let Some(s) = self.s {
            if s >= n / 2 {
                return Err(Error::Config(format!("s = {s} must be below N/2")));
            }
        }
        let width = self.width.resolve(|| learn::default_width(self.m, n));
        kernel::check_width(width, n).map_err(|e| Error::Config(e.to_string()))?;
        let shots = self
            .shots
            .resolve(|| (self.m as u64).saturating_pow(4));
        if shots == 0 {
            return Err(Error::Config("R must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.classical_fraction) {
            return Err(Error::Config("classical_fraction must lie in [0, 1]".into()));
        }
        let budget = self
            .budget
            .resolve(|| ((self.classical_fraction * n as f64).ceil() as usize).min(n));
        if budget > n {
            return Err(Error::Config(format!("X = {budget} exceeds N")));
        }
        let log_n = n.trailing_zeros() as usize;
        let pattern_length = match &self.pattern {
            Some(bits) => pattern::parse_bits(bits)
                .map_err(|e| Error::Config(e.to_string()))?
                .len(),
            None => self.pattern_length.resolve(|| 2 * log_n),
        };
        if self.problem == Problem::Pattern && !(1..=n).contains(&pattern_length) {
            return Err(Error::Config(format!("L = {pattern_length} must lie in 1..=N")));
        }
        if self.sweep_sizes.iter().any(|&s| !(s.is_power_of_two() && s >= 8)) {
            return Err(Error::Config("sweep_N entries must be powers of two >= 8".into()));
        }
        Ok(ResolvedConfig {
            problem: self.problem,
            domain_size: n,
            width,
            m: self.m,
            shots,
            c: self.c,
            tol: self.tol,
            backend: self.backend,
            learner: self.learner,
            trials: self.trials,
            seed: self.seed,
            test_points: self.test_points,
            s: self.s,
            label_rule: self.label_rule,
            budget,
            classical_fraction: self.classical_fraction,
            pattern_length,
            pattern: self.pattern.clone(),
            sweep_sizes: self.sweep_sizes.clone(),
            learners: self
                .learners
                .clone()
                .unwrap_or_else(|| LearnerKind::ALL.to_vec()),
        })
    }
}

/// Configuration with every `"auto"` replaced by its value; echoed in
/// reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub problem: Problem,
    #[serde(rename = "N")]
    pub domain_size: usize,
    #[serde(rename = "M")]
    pub width: usize,
    pub m: usize,
    #[serde(rename = "R")]
    pub shots: u64,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub backend: GroverBackend,
    pub learner: LearnerKind,
    pub trials: usize,
    pub seed: u64,
    pub test_points: usize,
    pub s: Option<usize>,
    pub label_rule: LabelRule,
    #[serde(rename = "X")]
    pub budget: usize,
    pub classical_fraction: f64,
    #[serde(rename = "L")]
    pub pattern_length: usize,
    pub pattern: Option<String>,
    #[serde(rename = "sweep_N")]
    pub sweep_sizes: Vec<usize>,
    pub learners: Vec<LearnerKind>,
}

impl ResolvedConfig {
    fn settings(&self) -> SvmSettings {
        SvmSettings {
            c: self.c,
            tol: self.tol,
        }
    }

    fn grover(&self) -> GroverConfig {
        GroverConfig {
            backend: self.backend,
            iterations: None,
        }
    }

    fn concept(&self, rng: &mut ChaCha8Rng) -> Result<Concept> {
        let s = self
            .s
            .unwrap_or_else(|| rng.random_range(0..self.domain_size / 2));
        Concept::with_rule(s, self.domain_size, self.label_rule)
    }

    /// The run's pattern: configured bits or a seeded draw.
    pub fn pattern_bits(&self) -> Result<Vec<bool>> {
        match &self.pattern {
            Some(bits) => pattern::parse_bits(bits),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[0x5041]));
                Ok((0..self.pattern_length).map(|_| rng.random()).collect())
            }
        }
    }
}

/// Outcome of one seeded trial. Failed trials keep their error and carry no
/// accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub s: Option<usize>,
    pub accuracy: Option<f64>,
    pub training: QueryLedger,
    pub inference: QueryLedger,
    /// Matcher costs (pattern problem only).
    pub pattern: Option<PatternLedger>,
    pub support_count: usize,
    /// Oracle plus classical queries per classified point; for the pattern
    /// problem, matcher time steps plus character comparisons.
    pub cost_per_classification: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub completed: usize,
    pub failed: usize,
    pub mean_accuracy: Option<f64>,
    pub ci_half_width: Option<f64>,
    pub fraction_at_least_099: Option<f64>,
    pub fraction_at_least_095: Option<f64>,
    pub training: QueryLedger,
    pub inference: QueryLedger,
    pub pattern: Option<PatternLedger>,
    pub mean_support: Option<f64>,
    pub mean_cost_per_classification: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ResolvedConfig,
    pub trials: Vec<TrialRecord>,
    pub summary: RunSummary,
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let workers: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV}={v} is not a worker count")))?;
        builder = builder.num_threads(workers.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every trial of `config` on a bounded pool; records stay in trial
/// order.
pub fn run(config: &ResolvedConfig) -> Result<RunReport> {
    let pool = worker_pool()?;
    let trials: Vec<TrialRecord> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect()
    });
    let summary = summarize(&trials);
    Ok(RunReport {
        config: config.clone(),
        trials,
        summary,
    })
}

pub fn summarize(trials: &[TrialRecord]) -> RunSummary {
    let done: Vec<&TrialRecord> = trials.iter().filter(|t| t.accuracy.is_some()).collect();
    let accs: Vec<f64> = done.iter().filter_map(|t| t.accuracy).collect();
    let frac = |threshold: f64| {
        (!accs.is_empty())
            .then(|| accs.iter().filter(|&&a| a >= threshold).count() as f64 / accs.len() as f64)
    };
    let ci = (!accs.is_empty()).then(|| mean_ci(&accs));
    let pattern = trials
        .iter()
        .filter_map(|t| t.pattern)
        .reduce(|a, b| a + b);
    let support: Vec<f64> = done.iter().map(|t| t.support_count as f64).collect();
    let cost: Vec<f64> = done.iter().map(|t| t.cost_per_classification).collect();
    RunSummary {
        completed: done.len(),
        failed: trials.len() - done.len(),
        mean_accuracy: ci.map(|c| c.mean),
        ci_half_width: ci.map(|c| c.half_width),
        fraction_at_least_099: frac(0.99),
        fraction_at_least_095: frac(0.95),
        training: trials.iter().map(|t| t.training).sum(),
        inference: trials.iter().map(|t| t.inference).sum(),
        pattern,
        mean_support: (!support.is_empty()).then(|| mean(&support)),
        mean_cost_per_classification: (!cost.is_empty()).then(|| mean(&cost)),
    }
}

pub fn trial_seed(config: &ResolvedConfig, trial: usize) -> u64 {
    derive_seed(config.seed, &[trial as u64])
}

/// One trial; errors are captured in the record.
pub fn run_trial(config: &ResolvedConfig, trial: usize) -> TrialRecord {
    let seed = trial_seed(config, trial);
    let mut record = TrialRecord {
        trial,
        seed,
        s: None,
        accuracy: None,
        training: QueryLedger::default(),
        inference: QueryLedger::default(),
        pattern: None,
        support_count: 0,
        cost_per_classification: 0.0,
        error: None,
    };
    let result = match config.problem {
        Problem::Indicator => indicator_trial(config, seed, &mut record),
        Problem::Pattern => pattern_trial(config, seed, &mut record),
    };
    if let Err(e) = result {
        record.accuracy = None;
        record.error = Some(e.to_string());
    }
    record
}

fn indicator_trial(config: &ResolvedConfig, seed: u64, record: &mut TrialRecord) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concept = config.concept(&mut rng)?;
    record.s = Some(concept.s);
    let test = balanced_test_set(&concept, config.test_points, derive_seed(seed, &[2]))?;
    let outcome: LearnerOutcome = match config.learner {
        LearnerKind::Classical => {
            learn::classical_learner(&concept, &test.oracles, config.budget, derive_seed(seed, &[3]))?
        }
        kind => {
            let train = generate_dataset(&concept, config.m, derive_seed(seed, &[1]))?;
            if kind == LearnerKind::QuantumKernel {
                learn::quantum_kernel_learner(
                    &train,
                    &test.oracles,
                    config.width,
                    config.shots,
                    config.settings(),
                    &config.grover(),
                    derive_seed(seed, &[3]),
                )?
            } else {
                learn::preprocessing_learner(
                    &train,
                    &test.oracles,
                    config.width,
                    config.settings(),
                    &config.grover(),
                    derive_seed(seed, &[3]),
                )?
            }
        }
    };
    record.accuracy = Some(accuracy(&outcome.predictions, &test.labels));
    record.training = outcome.training;
    record.inference = outcome.inference;
    record.support_count = outcome.support_count;
    record.cost_per_classification = outcome.queries_per_classification();
    Ok(())
}

/// Texts holding the run's pattern once each, at `locations`.
fn texts_at(
    config: &ResolvedConfig,
    pattern: &[bool],
    locations: &[usize],
    seed: u64,
) -> Result<Vec<TextInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    locations
        .iter()
        .map(|&t| pattern::random_instance(config.domain_size, pattern, t, &mut rng))
        .collect()
}

fn pattern_trial(config: &ResolvedConfig, seed: u64, record: &mut TrialRecord) -> Result<()> {
    let bits = config.pattern_bits()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concept = config.concept(&mut rng)?;
    record.s = Some(concept.s);

    let test_locs: Vec<usize> = {
        let t = balanced_test_set(&concept, config.test_points, derive_seed(seed, &[2]))?;
        t.marked()
    };
    let test_labels: Vec<Label> = test_locs.iter().map(|&j| concept.label(j)).collect();
    let test = texts_at(config, &bits, &test_locs, derive_seed(seed, &[4]))?;

    let mut ledger = PatternLedger::default();
    let predictions: Vec<Label> = match config.learner {
        LearnerKind::Classical => test
            .iter()
            .map(|inst| {
                let (found, cost) = pattern::kmp_search(inst.text(), inst.pattern());
                ledger += cost;
                found.map_or(Label::Negative, |j| concept.label(j))
            })
            .collect(),
        kind => {
            let train_locs = training_locations(&concept, config.m, derive_seed(seed, &[1]))?;
            let train_labels: Vec<Label> = train_locs.iter().map(|&j| concept.label(j)).collect();
            let train = texts_at(config, &bits, &train_locs, derive_seed(seed, &[5]))?;
            let (preds, support, training) = if kind == LearnerKind::Preprocessing {
                pattern_preprocessing(config, &train, &train_labels, &test, seed, &mut ledger)?
            } else {
                pattern_quantum_kernel(config, &train, &train_labels, &test, seed, &mut ledger)?
            };
            record.support_count = support;
            record.training = training;
            preds
        }
    };
    record.accuracy = Some(accuracy(&predictions, &test_labels));
    record.cost_per_classification = (ledger.gate_steps + ledger.classical_char_comparisons) as f64
        / config.test_points as f64;
    record.pattern = Some(ledger);
    Ok(())
}

/// `m` distinct locations with both classes present.
fn training_locations(concept: &Concept, m: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(generate_dataset(concept, m, seed)?.marked())
}

type PatternFit = (Vec<Label>, usize, QueryLedger);

fn pattern_preprocessing(
    config: &ResolvedConfig,
    train: &[TextInstance],
    labels: &[Label],
    test: &[TextInstance],
    seed: u64,
    inference: &mut PatternLedger,
) -> Result<PatternFit> {
    let n = config.domain_size;
    let grover = config.grover();
    let mut found = Vec::with_capacity(train.len());
    for (i, inst) in train.iter().enumerate() {
        found.push(pattern::pattern_match(inst, &grover, derive_seed(seed, &[6, i as u64]))?.location);
    }
    let gram = kernel::assemble(found.len(), KernelMode::Exact, |i, j| {
        kernel_exact(found[i], found[j], config.width, n)
    })?;
    let model = svm::train(&gram, labels, config.c, config.tol)?;
    let mut preds = Vec::with_capacity(test.len());
    for (t, inst) in test.iter().enumerate() {
        let hit = pattern::pattern_match(inst, &grover, derive_seed(seed, &[7, t as u64]))?;
        *inference += hit.ledger;
        let row = found
            .iter()
            .map(|&r| kernel_exact(hit.location, r, config.width, n))
            .collect::<Result<Vec<_>>>()?;
        preds.push(svm::decide(&model, &row)?.1);
    }
    Ok((preds, model.num_support(), QueryLedger::default()))
}

fn pattern_quantum_kernel(
    config: &ResolvedConfig,
    train: &[TextInstance],
    labels: &[Label],
    test: &[TextInstance],
    seed: u64,
    inference: &mut PatternLedger,
) -> Result<PatternFit> {
    let mode = match config.backend {
        GroverBackend::Ideal => KernelMode::Exact,
        GroverBackend::Faithful => KernelMode::CircuitFaithful,
    };
    let truth = |a: &TextInstance, b: &TextInstance| {
        pattern::pattern_kernel(a, b, config.width, mode, 0).map(|v| v.clamp(0.0, 1.0))
    };
    let shots = config.shots;
    let gram = kernel::assemble(train.len(), KernelMode::Sampled { shots }, |i, j| {
        kernel_sampled(truth(&train[i], &train[j])?, shots, derive_seed(seed, &[8, i as u64, j as u64]))
    })?;
    let model = svm::train(&gram, labels, config.c, config.tol)?;
    // Each shot runs U_P(T_a) and U_P(T_b)†, i.e. the matcher four times.
    let per_shot = matcher_ledger(config.domain_size, config.pattern_length);
    let mut preds = Vec::with_capacity(test.len());
    for (t, inst) in test.iter().enumerate() {
        let mut row = vec![0.0; train.len()];
        for &sv in &model.support_indices {
            row[sv] = kernel_sampled(
                truth(inst, &train[sv])?,
                shots,
                derive_seed(seed, &[9, t as u64, sv as u64]),
            )?;
            inference.gate_steps += 4 * shots * per_shot.gate_steps;
            inference.amplification_rounds += 4 * shots * per_shot.amplification_rounds;
        }
        preds.push(svm::decide(&model, &row)?.1);
    }
    let pairs = (train.len() * (train.len() - 1) / 2) as u64;
    let training = QueryLedger {
        shots: pairs * shots,
        ..QueryLedger::default()
    };
    Ok((preds, model.num_support(), training))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum RunLine {
    Header {
        schema_version: u32,
        kind: String,
        config: ResolvedConfig,
    },
    Trial(TrialRecord),
    Summary(RunSummary),
}

fn json_line<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{line}")?;
    Ok(())
}

fn header_check(schema_version: u32, kind: &str, expected: &str) -> Result<()> {
    if schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported report schema version {schema_version} (expected {SCHEMA_VERSION})"
        )));
    }
    if kind != expected {
        return Err(Error::Config(format!("expected a {expected} report, found {kind}")));
    }
    Ok(())
}

impl RunReport {
    pub fn write_jsonl(&self, out: &mut impl Write) -> Result<()> {
        json_line(
            out,
            &RunLine::Header {
                schema_version: SCHEMA_VERSION,
                kind: "run".into(),
                config: self.config.clone(),
            },
        )?;
        for t in &self.trials {
            json_line(out, &RunLine::Trial(t.clone()))?;
        }
        json_line(out, &RunLine::Summary(self.summary.clone()))
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut config = None;
        let mut trials = Vec::new();
        let mut summary = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if i == 0 {
                check_version_field(&line)?;
            }
            let parsed: RunLine = serde_json::from_str(&line)
                .map_err(|e| Error::Config(format!("report line {}: {e}", i + 1)))?;
            match parsed {
                RunLine::Header {
                    schema_version,
                    kind,
                    config: c,
                } => {
                    header_check(schema_version, &kind, "run")?;
                    config = Some(c);
                }
                RunLine::Trial(t) => trials.push(t),
                RunLine::Summary(s) => summary = Some(s),
            }
        }
        Ok(RunReport {
            config: config.ok_or_else(|| Error::Config("report has no header".into()))?,
            trials,
            summary: summary.ok_or_else(|| Error::Config("report has no summary".into()))?,
        })
    }

    /// One row per trial.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "trial",
            "seed",
            "s",
            "accuracy",
            "oracle_queries",
            "shots",
            "classical_evaluations",
            "support_count",
            "cost_per_classification",
            "error",
        ])
        .map_err(csv_err)?;
        for t in &self.trials {
            let ledger = t.training + t.inference;
            w.write_record([
                t.trial.to_string(),
                t.seed.to_string(),
                t.s.map_or(String::new(), |s| s.to_string()),
                t.accuracy.map_or(String::new(), |a| a.to_string()),
                ledger.oracle_queries.to_string(),
                ledger.shots.to_string(),
                ledger.classical_evaluations.to_string(),
                t.support_count.to_string(),
                t.cost_per_classification.to_string(),
                t.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rejects unknown versions before attempting a full parse, so a future
/// header layout still yields a version error rather than a parse error.
fn check_version_field(line: &str) -> Result<()> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Error::Config(format!("report header: {e}")))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => Ok(()),
        Some(v) => Err(Error::Config(format!(
            "unsupported report schema version {v} (expected {SCHEMA_VERSION})"
        ))),
        None => Err(Error::Config("report header lacks schema_version".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub learner: LearnerKind,
    pub slope: f64,
    pub slope_std_err: f64,
    pub intercept: f64,
}

/// Quantum-kernel over preprocessing cost at one `N`, next to `4·d·R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRatio {
    #[serde(rename = "N")]
    pub domain_size: usize,
    pub ratio: f64,
    pub four_d_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub config: ResolvedConfig,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<SlopeFit>,
    pub ratios: Vec<CostRatio>,
}

impl SweepReport {
    pub fn fit(&self, learner: LearnerKind) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.learner == learner)
    }
}

/// Complexity sweep over `sweep_N` for every configured learner.
pub fn sweep(config: &ResolvedConfig) -> Result<SweepReport> {
    if config.sweep_sizes.len() < 4 {
        return Err(Error::Config("a sweep needs at least four values of N".into()));
    }
    let params = SweepParams {
        m: config.m,
        shots: config.shots,
        c: config.c,
        test_points: config.test_points,
        classical_fraction: config.classical_fraction,
    };
    let pool = worker_pool()?;
    let per_learner: Vec<Vec<SweepRow>> = pool.install(|| {
        config
            .learners
            .par_iter()
            .map(|&kind| {
                learn::complexity_sweep(kind, &config.sweep_sizes, config.trials, config.seed, &params)
            })
            .collect::<Result<_>>()
    })?;
    let rows: Vec<SweepRow> = per_learner.into_iter().flatten().collect();
    let mut fits = Vec::new();
    for &kind in &config.learners {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.learner == kind)
            .map(|r| (r.domain_size as f64, r.mean_queries))
            .collect();
        if let Some(LogLogFit {
            slope,
            slope_std_err,
            intercept,
        }) = loglog_fit(&points)
        {
            fits.push(SlopeFit {
                learner: kind,
                slope,
                slope_std_err,
                intercept,
            });
        }
    }
    let by_key: BTreeMap<(LearnerKind, usize), &SweepRow> =
        rows.iter().map(|r| ((r.learner, r.domain_size), r)).collect();
    let ratios = config
        .sweep_sizes
        .iter()
        .filter_map(|&n| {
            let qk = by_key.get(&(LearnerKind::QuantumKernel, n))?;
            let pre = by_key.get(&(LearnerKind::Preprocessing, n))?;
            Some(CostRatio {
                domain_size: n,
                ratio: qk.mean_queries / pre.mean_queries,
                four_d_r: 4.0 * qk.mean_support * config.shots as f64,
            })
        })
        .collect();
    Ok(SweepReport {
        config: config.clone(),
        rows,
        fits,
        ratios,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum SweepLine {
    Header {
        schema_version: u32,
        kind: String,
        config: ResolvedConfig,
    },
    Row(SweepRow),
    Fit(SlopeFit),
    Ratio(CostRatio),
}

impl SweepReport {
    pub fn write_jsonl(&self, out: &mut impl Write) -> Result<()> {
        json_line(
            out,
            &SweepLine::Header {
                schema_version: SCHEMA_VERSION,
                kind: "sweep".into(),
                config: self.config.clone(),
            },
        )?;
        for r in &self.rows {
            json_line(out, &SweepLine::Row(*r))?;
        }
        for f in &self.fits {
            json_line(out, &SweepLine::Fit(f.clone()))?;
        }
        for r in &self.ratios {
            json_line(out, &SweepLine::Ratio(r.clone()))?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut report = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if i == 0 {
                check_version_field(&line)?;
            }
            let parsed: SweepLine = serde_json::from_str(&line)
                .map_err(|e| Error::Config(format!("report line {}: {e}", i + 1)))?;
            match (parsed, report.as_mut()) {
                (SweepLine::Header { schema_version, kind, config }, None) => {
                    header_check(schema_version, &kind, "sweep")?;
                    report = Some(SweepReport {
                        config,
                        rows: Vec::new(),
                        fits: Vec::new(),
                        ratios: Vec::new(),
                    });
                }
                (SweepLine::Row(r), Some(rep)) => rep.rows.push(r),
                (SweepLine::Fit(f), Some(rep)) => rep.fits.push(f),
                (SweepLine::Ratio(r), Some(rep)) => rep.ratios.push(r),
                _ => return Err(Error::Config(format!("unexpected report line {}", i + 1))),
            }
        }
        report.ok_or_else(|| Error::Config("report has no header".into()))
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["learner", "N", "mean_queries", "mean_support"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.learner.name().to_string(),
                r.domain_size.to_string(),
                r.mean_queries.to_string(),
                r.mean_support.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One row of an exported dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub index: usize,
    /// Marked element, or the pattern location for texts.
    pub marked: usize,
    pub label: Label,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum DatasetLine {
    Header {
        schema_version: u32,
        kind: String,
        problem: Problem,
        concept: Concept,
        m: usize,
        seed: u64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        pattern: Option<String>,
    },
    Row(DatasetRow),
}

/// Training set of the configured problem, with concept and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedDataset {
    pub problem: Problem,
    pub concept: Concept,
    pub seed: u64,
    pub pattern: Option<String>,
    pub rows: Vec<DatasetRow>,
}

pub fn gen_data(config: &ResolvedConfig) -> Result<ExportedDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[0x6461]));
    let concept = config.concept(&mut rng)?;
    let data = generate_dataset(&concept, config.m, derive_seed(config.seed, &[0x6462]))?;
    let (pattern, texts) = match config.problem {
        Problem::Indicator => (None, None),
        Problem::Pattern => {
            let bits = config.pattern_bits()?;
            let texts = texts_at(config, &bits, &data.marked(), derive_seed(config.seed, &[0x6463]))?;
            (Some(format_bits(&bits)), Some(texts))
        }
    };
    let rows = data
        .marked()
        .into_iter()
        .zip(&data.labels)
        .enumerate()
        .map(|(i, (marked, &label))| DatasetRow {
            index: i,
            marked,
            label,
            text: texts.as_ref().map(|t| format_bits(t[i].text())),
        })
        .collect();
    Ok(ExportedDataset {
        problem: config.problem,
        concept,
        seed: config.seed,
        pattern,
        rows,
    })
}

impl ExportedDataset {
    pub fn write_jsonl(&self, out: &mut impl Write) -> Result<()> {
        json_line(
            out,
            &DatasetLine::Header {
                schema_version: SCHEMA_VERSION,
                kind: "dataset".into(),
                problem: self.problem,
                concept: self.concept,
                m: self.rows.len(),
                seed: self.seed,
                pattern: self.pattern.clone(),
            },
        )?;
        for r in &self.rows {
            json_line(out, &DatasetLine::Row(r.clone()))?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut out = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if i == 0 {
                check_version_field(&line)?;
            }
            let parsed: DatasetLine = serde_json::from_str(&line)
                .map_err(|e| Error::Config(format!("dataset line {}: {e}", i + 1)))?;
            match (parsed, out.as_mut()) {
                (
                    DatasetLine::Header {
                        schema_version,
                        kind,
                        problem,
                        concept,
                        seed,
                        pattern,
                        ..
                    },
                    None,
                ) => {
                    header_check(schema_version, &kind, "dataset")?;
                    out = Some(ExportedDataset {
                        problem,
                        concept,
                        seed,
                        pattern,
                        rows: Vec::new(),
                    });
                }
                (DatasetLine::Row(r), Some(d)) => d.rows.push(r),
                _ => return Err(Error::Config(format!("unexpected dataset line {}", i + 1))),
            }
        }
        out.ok_or_else(|| Error::Config("dataset has no header".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Defaults for tests, overridden line by line by `extra`.
    fn base(extra: &str) -> ResolvedConfig {
        let overrides: Vec<(String, String)> = "N = 64\nseed = 7\ntrials = 3\ntest_points = 40"
            .lines()
            .chain(extra.lines())
            .map(|l| {
                let (k, v) = l.split_once('=').unwrap();
                (k.trim().to_string(), v.trim().to_string())
            })
            .collect();
        ExperimentConfig::load(None, &overrides).unwrap().resolve().unwrap()
    }

    #[test]
    fn auto_values_resolve() {
        let c = base("m = 8");
        assert_eq!(c.shots, 4096);
        assert_eq!(c.width, 8);
        assert_eq!(c.budget, 32);
        assert_eq!(c.pattern_length, 12);
        let c = base("m = 8\nM = 4\nR = 10\nX = 3");
        assert_eq!((c.width, c.shots, c.budget), (4, 10, 3));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            "N = 64",
            "N = 48\nseed = 1",
            "N = 64\nseed = 1\nm = 65",
            "N = 64\nseed = 1\nM = 32",
            "N = 64\nseed = 1\nbogus = 2",
            "N = 64\nseed = 1\ns = 32",
            "N = 64\nseed = 1\nR = 0",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn overrides_win() {
        let dir = std::env::temp_dir().join(format!("qsvm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "N = 64\nseed = 1\nlearner = \"classical\"\n").unwrap();
        let c = ExperimentConfig::load(
            Some(&path),
            &[("learner".into(), "preprocessing".into()), ("M".into(), "auto".into())],
        )
        .unwrap();
        assert_eq!(c.learner, LearnerKind::Preprocessing);
        assert_eq!(c.width, AutoOr::default());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn run_is_deterministic_and_round_trips() {
        let c = base("learner = \"quantum_kernel\"\nm = 12\nR = 200");
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        let (mut ja, mut jb) = (Vec::new(), Vec::new());
        a.write_jsonl(&mut ja).unwrap();
        b.write_jsonl(&mut jb).unwrap();
        assert_eq!(ja, jb);
        let back = RunReport::read_jsonl(&ja[..]).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.trials.iter().map(|t| t.trial).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn unknown_schema_version_is_rejected() {
        let c = base("learner = \"classical\"");
        let mut out = Vec::new();
        run(&c).unwrap().write_jsonl(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap().replacen("\"schema_version\":1", "\"schema_version\":99", 1);
        let err = RunReport::read_jsonl(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("schema version 99"));
    }

    #[test]
    fn classical_without_budget_guesses() {
        let c = base("learner = \"classical\"\nX = 0\ntrials = 20\ntest_points = 200");
        let r = run(&c).unwrap();
        assert!((r.summary.mean_accuracy.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn preprocessing_equals_noiseless_quantum_kernel() {
        let pre = run(&base("learner = \"preprocessing\"\nm = 16")).unwrap();
        let qk = run(&base("learner = \"quantum_kernel\"\nm = 16\nR = 1099511627776")).unwrap();
        for (a, b) in pre.trials.iter().zip(&qk.trials) {
            assert_eq!(a.accuracy, b.accuracy);
        }
    }

    #[test]
    fn resource_cap_is_per_trial() {
        let c = base("N = 8192\nbackend = \"faithful\"\nlearner = \"quantum_kernel\"\ntrials = 2\ntest_points = 2\nm = 4\nR = 1")
            ;
        let r = run(&c).unwrap();
        assert_eq!(r.summary.failed, 2);
        assert!(r.trials[0].error.as_ref().unwrap().contains("resource cap"));
    }

    #[test]
    fn pattern_problem_runs_for_every_learner() {
        for learner in ["preprocessing", "quantum_kernel", "classical"] {
            let c = base(&format!("problem = \"pattern\"\nlearner = \"{learner}\"\nm = 16\nR = 1000"));
            let r = run(&c).unwrap();
            assert_eq!(r.summary.failed, 0, "{learner}: {:?}", r.trials[0].error);
            assert!(r.summary.mean_accuracy.unwrap() > 0.7, "{learner}");
        }
    }

    #[test]
    fn dataset_export() {
        let c = base("N = 16\ns = 0\nm = 16");
        let d = gen_data(&c).unwrap();
        assert_eq!(d.rows.len(), 16);
        for r in &d.rows {
            assert_eq!(r.label, d.concept.label(r.marked));
        }
        let mut out = Vec::new();
        d.write_jsonl(&mut out).unwrap();
        assert_eq!(ExportedDataset::read_jsonl(&out[..]).unwrap(), d);
        let p = gen_data(&base("problem = \"pattern\"\nm = 8")).unwrap();
        assert!(p.rows.iter().all(|r| r.text.as_ref().unwrap().len() == 64));
    }

    #[test]
    fn small_sweep_has_fits_and_ratios() {
        let c = base("m = 8\nR = 50\ntrials = 2\ntest_points = 4\nsweep_N = [16, 32, 64, 128]");
        let s = sweep(&c).unwrap();
        assert_eq!(s.rows.len(), 12);
        assert_eq!(s.fits.len(), 3);
        assert_eq!(s.ratios.len(), 4);
        let mut out = Vec::new();
        s.write_jsonl(&mut out).unwrap();
        assert_eq!(SweepReport::read_jsonl(&out[..]).unwrap(), s);
    }
}
