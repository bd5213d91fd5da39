//! The cyclic classification problem and the learners that solve it.
//!
//! A concept `y_s` labels the indicator of `j` with +1 when `j` lies in the
//! half-cycle starting at `s`. Three learners compete on it:
//!
//! * a classical learner that brute-forces the hidden element,
//! * a quantum-kernel SVM whose every kernel value is a shot-sampled circuit
//!   estimate,
//! * a preprocessing learner that runs Grover once per datum, stores the
//!   result and evaluates the kernel classically.
//!
//! Each learner returns a [`QueryLedger`] so their costs can be compared.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{exact_log2, structural, Error, Result};
use crate::grover::{grover_search, GroverBackend, GroverConfig, IndicatorOracle};
use crate::kernel::{self, kernel_exact, kernel_sampled, KernelMode};
use crate::seed::derive_seed;
use crate::sim::StateVector;
use crate::svm::{self, Label, SvmModel};

pub use crate::ledger::QueryLedger;

/// Width of the positive interval relative to `s`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// `j ∈ [s, s + (N − 2)/2]`: exactly half the cycle.
    #[default]
    HalfCycle,
    /// `j ∈ [s, s + (log₂N − 2)/2]`, the narrower rule stated for texts.
    LogWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub s: usize,
    pub domain_size: usize,
    #[serde(default)]
    pub rule: LabelRule,
}

impl Concept {
    pub fn new(s: usize, domain_size: usize) -> Result<Self> {
        Self::with_rule(s, domain_size, LabelRule::HalfCycle)
    }

    pub fn with_rule(s: usize, domain_size: usize, rule: LabelRule) -> Result<Self> {
        match exact_log2(domain_size) {
            Some(n) if n >= 3 => {}
            _ => return Err(Error::UnsupportedSize(domain_size)),
        }
        if s >= domain_size / 2 {
            return Err(structural(format!(
                "s = {s} must be below N/2 = {}",
                domain_size / 2
            )));
        }
        Ok(Self {
            s,
            domain_size,
            rule,
        })
    }

    /// Last index of the positive interval.
    pub fn upper(&self) -> usize {
        match self.rule {
            LabelRule::HalfCycle => self.s + (self.domain_size - 2) / 2,
            LabelRule::LogWidth => {
                let n = self.domain_size.trailing_zeros() as usize;
                self.s + (n - 2) / 2
            }
        }
    }

    pub fn label(&self, j: usize) -> Label {
        if (self.s..=self.upper()).contains(&j) {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn positive_region(&self) -> std::ops::RangeInclusive<usize> {
        self.s..=self.upper()
    }
}

pub fn label(concept: &Concept, j: usize) -> Label {
    concept.label(j)
}

/// Labelled indicator oracles.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub oracles: Vec<IndicatorOracle>,
    pub labels: Vec<Label>,
    pub concept: Concept,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.oracles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oracles.is_empty()
    }

    pub fn marked(&self) -> Vec<usize> {
        self.oracles.iter().map(|o| o.reveal_marked()).collect()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&Label::Positive) && self.labels.contains(&Label::Negative)
    }
}

const DATASET_RETRIES: usize = 1000;

/// Draws `m` distinct marked elements uniformly, redrawing until both
/// classes are present.
pub fn generate_dataset(concept: &Concept, m: usize, rng_seed: u64) -> Result<Dataset> {
    let n = concept.domain_size;
    if m > n {
        return Err(structural(format!("cannot draw {m} distinct elements from Z_{n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..DATASET_RETRIES {
        let marked = index::sample(&mut rng, n, m).into_vec();
        let labels: Vec<Label> = marked.iter().map(|&j| concept.label(j)).collect();
        if labels.contains(&Label::Positive) && labels.contains(&Label::Negative) {
            let oracles = marked
                .iter()
                .map(|&j| IndicatorOracle::new(n, j))
                .collect::<Result<_>>()?;
            return Ok(Dataset {
                oracles,
                labels,
                concept: *concept,
            });
        }
    }
    Err(Error::DegenerateProblem(format!(
        "no two-class sample of size {m} after {DATASET_RETRIES} draws"
    )))
}

/// `size` fresh oracles, half from each class (with replacement).
pub fn balanced_test_set(concept: &Concept, size: usize, rng_seed: u64) -> Result<Dataset> {
    let n = concept.domain_size;
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&j| concept.label(j) == Label::Positive);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut marked = Vec::with_capacity(size);
    for i in 0..size {
        let pool = if i < size / 2 { &pos } else { &neg };
        marked.push(pool[rng.random_range(0..pool.len())]);
    }
    marked.shuffle(&mut rng);
    let labels = marked.iter().map(|&j| concept.label(j)).collect();
    let oracles = marked
        .iter()
        .map(|&j| IndicatorOracle::new(n, j))
        .collect::<Result<_>>()?;
    Ok(Dataset {
        oracles,
        labels,
        concept: *concept,
    })
}

pub fn accuracy(predictions: &[Label], truth: &[Label]) -> f64 {
    if truth.is_empty() {
        return f64::NAN;
    }
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    correct as f64 / truth.len() as f64
}

/// `√(2/N) Σ_{i<N/2} |s + i⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfspaceState {
    pub s: usize,
    pub domain_size: usize,
}

impl HalfspaceState {
    pub fn new(s: usize, domain_size: usize) -> Result<Self> {
        Concept::new(s, domain_size)?;
        Ok(Self { s, domain_size })
    }

    pub fn amplitude(&self) -> f64 {
        (2.0 / self.domain_size as f64).sqrt()
    }

    pub fn contains(&self, j: usize) -> bool {
        (j + self.domain_size - self.s) % self.domain_size < self.domain_size / 2
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.domain_size / 2).map(move |i| (self.s + i) % self.domain_size)
    }

    pub fn to_state_vector(&self) -> Result<StateVector> {
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); self.domain_size];
        for j in self.support() {
            amps[j] = num_complex::Complex64::new(self.amplitude(), 0.0);
        }
        StateVector::from_amplitudes(self.domain_size.trailing_zeros() as usize, amps)
    }
}

/// The margin gap `Δ = 2M/N`.
pub fn margin_gap(width: usize, domain_size: usize) -> f64 {
    2.0 * width as f64 / domain_size as f64
}

/// `|⟨Φ_s|Ψ(I_t)⟩|²`, from the number of interval indices inside the
/// halfspace support.
pub fn halfspace_overlap(s: usize, t: usize, width: usize, domain_size: usize) -> Result<f64> {
    let phi = HalfspaceState::new(s, domain_size)?;
    kernel::check_width(width, domain_size)?;
    if t >= domain_size {
        return Err(structural(format!("t = {t} outside Z_{domain_size}")));
    }
    let inside = (0..width)
        .filter(|l| phi.contains((t + l) % domain_size))
        .count();
    Ok(2.0 / (domain_size * width) as f64 * (inside * inside) as f64)
}

/// Exhaustive overlap census of both classes for one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparabilityCensus {
    pub class_size: usize,
    /// +1-class indices whose interval lies inside the halfspace with at
    /// least `M` indices to spare: `s + (N − 2)/2 − t ≥ M`.
    pub positive_interior: usize,
    /// Interior +1 indices whose overlap is exactly `Δ`.
    pub positive_interior_at_delta: usize,
    /// All +1 indices whose overlap is exactly `Δ`.
    pub positive_at_delta: usize,
    /// −1-class indices with `s + N − 1 − t ≥ M`.
    pub negative_interior: usize,
    pub negative_interior_at_zero: usize,
    pub negative_at_zero: usize,
    /// Indices the reference hyperplane labels wrongly.
    pub misclassified: usize,
}

pub fn separability_census(s: usize, width: usize, domain_size: usize) -> Result<SeparabilityCensus> {
    let concept = Concept::new(s, domain_size)?;
    let delta = margin_gap(width, domain_size);
    let half = domain_size / 2;
    let mut census = SeparabilityCensus {
        class_size: half,
        positive_interior: 0,
        positive_interior_at_delta: 0,
        positive_at_delta: 0,
        negative_interior: 0,
        negative_interior_at_zero: 0,
        negative_at_zero: 0,
        misclassified: 0,
    };
    for offset in 0..domain_size {
        let t = (s + offset) % domain_size;
        let overlap = halfspace_overlap(s, t, width, domain_size)?;
        if reference_hyperplane_classify(s, t, width, domain_size)? != concept.label(t) {
            census.misclassified += 1;
        }
        // Overlaps are (2/(NM))·c² with integer c, so these comparisons are
        // exact up to rounding of the product.
        let at_delta = (overlap - delta).abs() < 1e-12;
        if offset < half {
            let interior = half - 1 - offset >= width;
            census.positive_interior += interior as usize;
            census.positive_interior_at_delta += (interior && at_delta) as usize;
            census.positive_at_delta += at_delta as usize;
        } else {
            let interior = domain_size - 1 - offset >= width;
            census.negative_interior += interior as usize;
            census.negative_interior_at_zero += (interior && overlap == 0.0) as usize;
            census.negative_at_zero += (overlap == 0.0) as usize;
        }
    }
    Ok(census)
}

/// Classifies `t` with the hyperplane `w = |Φ_s⟩⟨Φ_s|`, `b = −Δ/2`.
pub fn reference_hyperplane_classify(
    s: usize,
    t: usize,
    width: usize,
    domain_size: usize,
) -> Result<Label> {
    let overlap = halfspace_overlap(s, t, width, domain_size)?;
    Ok(Label::from_sign(overlap - margin_gap(width, domain_size) / 2.0))
}

/// `min(1, 1/2 + 3X/(2N))`.
pub fn classical_accuracy_bound(budget: usize, domain_size: usize) -> f64 {
    (0.5 + 1.5 * budget as f64 / domain_size as f64).min(1.0)
}

/// Brute-force classical learner that knows `s`: probes `budget` distinct
/// indices, positive region first, and answers −1 unless the marked element
/// turned up in the positive region. Every probe is billed.
pub fn classical_learner_classify(
    oracle: &IndicatorOracle,
    concept: &Concept,
    budget: usize,
    rng_seed: u64,
) -> Result<(Label, QueryLedger)> {
    let n = oracle.domain_size();
    if n != concept.domain_size {
        return Err(structural("oracle and concept disagree on N"));
    }
    if budget > n {
        return Err(structural(format!("budget {budget} exceeds N = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mut positive, mut negative): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&j| concept.label(j) == Label::Positive);
    positive.shuffle(&mut rng);
    negative.shuffle(&mut rng);
    let mut found = None;
    for &probe in positive.iter().chain(&negative).take(budget) {
        if oracle.evaluate(probe) {
            found = Some(probe);
        }
    }
    let label = match found {
        Some(j) => concept.label(j),
        None => Label::Negative,
    };
    Ok((
        label,
        QueryLedger {
            classical_evaluations: budget as u64,
            ..QueryLedger::default()
        },
    ))
}

/// Smallest power of two `M` with `m·M ≥ 2N`, capped at `N/8`.
pub fn default_width(m: usize, domain_size: usize) -> usize {
    let cap = (domain_size / 8).max(1);
    let mut width = 1;
    while width * m < 2 * domain_size && width < cap {
        width *= 2;
    }
    width.min(cap)
}

/// Predictions plus the resources spent on training and on inference.
#[derive(Debug, Clone)]
pub struct LearnerOutcome {
    pub predictions: Vec<Label>,
    pub training: QueryLedger,
    pub inference: QueryLedger,
    /// Support vectors of the trained model (zero for the classical learner).
    pub support_count: usize,
    pub model: Option<SvmModel>,
}

impl LearnerOutcome {
    pub fn ledger(&self) -> QueryLedger {
        self.training + self.inference
    }

    /// Oracle plus classical queries per classified point.
    pub fn queries_per_classification(&self) -> f64 {
        let total = self.inference.oracle_queries + self.inference.classical_evaluations;
        total as f64 / self.predictions.len().max(1) as f64
    }
}

/// Solver settings shared by the SVM-based learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmSettings {
    pub c: f64,
    pub tol: f64,
}

impl Default for SvmSettings {
    fn default() -> Self {
        Self { c: 1.0, tol: 1e-6 }
    }
}

/// Noise-free kernel value the circuit would estimate. The faithful backend
/// runs the circuit on private oracle copies so no queries are billed here.
fn true_kernel(a: usize, b: usize, width: usize, n: usize, backend: GroverBackend) -> Result<f64> {
    match backend {
        GroverBackend::Ideal => kernel_exact(a, b, width, n),
        GroverBackend::Faithful => {
            let (oa, ob) = (IndicatorOracle::new(n, a)?, IndicatorOracle::new(n, b)?);
            let value = kernel::kernel_circuit(&oa, &ob, width, &GroverConfig::faithful())?.0;
            Ok(value.clamp(0.0, 1.0))
        }
    }
}

fn check_learner_inputs(train: &Dataset, test: &[IndicatorOracle]) -> Result<usize> {
    let n = train.concept.domain_size;
    if train.oracles.iter().chain(test).any(|o| o.domain_size() != n) {
        return Err(structural("all oracles must share the concept's domain"));
    }
    if !train.has_both_classes() {
        return Err(Error::DegenerateProblem("training set has a single class".into()));
    }
    Ok(n)
}

/// Quantum-kernel SVM: trains on an `R`-shot sampled Gram matrix and
/// classifies each test point from `R`-shot estimates against the support
/// vectors only. Every shot of every kernel circuit bills `4k` queries.
pub fn quantum_kernel_learner(
    train: &Dataset,
    test: &[IndicatorOracle],
    width: usize,
    shots: u64,
    settings: SvmSettings,
    config: &GroverConfig,
    rng_seed: u64,
) -> Result<LearnerOutcome> {
    let n = check_learner_inputs(train, test)?;
    if shots == 0 {
        return Err(structural("shots must be at least 1"));
    }
    kernel::check_width(width, n)?;
    let k = config.iterations_for(1, n) as u64;
    let per_eval = 4 * k * shots;
    let marked = train.marked();
    let m = marked.len();

    let gram = kernel::assemble(m, KernelMode::Sampled { shots }, |i, j| {
        train.oracles[i].counter().charge(per_eval / 2);
        train.oracles[j].counter().charge(per_eval / 2);
        let truth = true_kernel(marked[i], marked[j], width, n, config.backend)?;
        kernel_sampled(truth, shots, derive_seed(rng_seed, &[0, i as u64, j as u64]))
    })?;
    let pairs = (m * (m - 1) / 2) as u64;
    let training = QueryLedger {
        oracle_queries: pairs * per_eval,
        shots: pairs * shots,
        classical_evaluations: 0,
    };
    let model = svm::train(&gram, &train.labels, settings.c, settings.tol)?;

    let mut inference = QueryLedger::default();
    let mut predictions = Vec::with_capacity(test.len());
    for (t, oracle) in test.iter().enumerate() {
        let mut row = vec![0.0; m];
        for &sv in &model.support_indices {
            oracle.counter().charge(per_eval / 2);
            train.oracles[sv].counter().charge(per_eval / 2);
            let truth = true_kernel(oracle.reveal_marked(), marked[sv], width, n, config.backend)?;
            row[sv] = kernel_sampled(truth, shots, derive_seed(rng_seed, &[1, t as u64, sv as u64]))?;
            inference.oracle_queries += per_eval;
            inference.shots += shots;
        }
        predictions.push(svm::decide(&model, &row)?.1);
    }
    Ok(LearnerOutcome {
        predictions,
        training,
        inference,
        support_count: model.num_support(),
        model: Some(model),
    })
}

/// Hybrid learner: one Grover search per datum, results stored, kernel
/// evaluated classically on the recovered indices.
pub fn preprocessing_learner(
    train: &Dataset,
    test: &[IndicatorOracle],
    width: usize,
    settings: SvmSettings,
    config: &GroverConfig,
    rng_seed: u64,
) -> Result<LearnerOutcome> {
    let n = check_learner_inputs(train, test)?;
    kernel::check_width(width, n)?;
    let mut training = QueryLedger::default();
    let mut recovered = Vec::with_capacity(train.len());
    for (i, oracle) in train.oracles.iter().enumerate() {
        let (found, ledger) = grover_search(oracle, config, derive_seed(rng_seed, &[2, i as u64]))?;
        recovered.push(found);
        training += ledger;
    }
    let gram = kernel::assemble(recovered.len(), KernelMode::Exact, |i, j| {
        kernel_exact(recovered[i], recovered[j], width, n)
    })?;
    let model = svm::train(&gram, &train.labels, settings.c, settings.tol)?;

    let mut inference = QueryLedger::default();
    let mut predictions = Vec::with_capacity(test.len());
    for (t, oracle) in test.iter().enumerate() {
        let (found, ledger) = grover_search(oracle, config, derive_seed(rng_seed, &[3, t as u64]))?;
        inference += ledger;
        let row = recovered
            .iter()
            .map(|&r| kernel_exact(found, r, width, n))
            .collect::<Result<Vec<_>>>()?;
        predictions.push(svm::decide(&model, &row)?.1);
    }
    Ok(LearnerOutcome {
        predictions,
        training,
        inference,
        support_count: model.num_support(),
        model: Some(model),
    })
}

/// Exact-kernel SVM on the true marked elements: the noiseless reference
/// both quantum learners converge to.
pub fn exact_kernel_learner(
    train: &Dataset,
    test: &[IndicatorOracle],
    width: usize,
    settings: SvmSettings,
) -> Result<LearnerOutcome> {
    let n = check_learner_inputs(train, test)?;
    let marked = train.marked();
    let gram = kernel::gram_matrix(&train.oracles, width, KernelMode::Exact, 0)?;
    let model = svm::train(&gram, &train.labels, settings.c, settings.tol)?;
    let predictions = test
        .iter()
        .map(|o| {
            let row = marked
                .iter()
                .map(|&r| kernel_exact(o.reveal_marked(), r, width, n))
                .collect::<Result<Vec<_>>>()?;
            Ok(svm::decide(&model, &row)?.1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LearnerOutcome {
        predictions,
        training: QueryLedger::default(),
        inference: QueryLedger::default(),
        support_count: model.num_support(),
        model: Some(model),
    })
}

/// Classical brute-force learner with `budget` probes per test point.
pub fn classical_learner(
    concept: &Concept,
    test: &[IndicatorOracle],
    budget: usize,
    rng_seed: u64,
) -> Result<LearnerOutcome> {
    let mut inference = QueryLedger::default();
    let mut predictions = Vec::with_capacity(test.len());
    for (t, oracle) in test.iter().enumerate() {
        let (label, ledger) =
            classical_learner_classify(oracle, concept, budget, derive_seed(rng_seed, &[4, t as u64]))?;
        inference += ledger;
        predictions.push(label);
    }
    Ok(LearnerOutcome {
        predictions,
        training: QueryLedger::default(),
        inference,
        support_count: 0,
        model: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    QuantumKernel,
    Preprocessing,
    Classical,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [
        LearnerKind::Classical,
        LearnerKind::QuantumKernel,
        LearnerKind::Preprocessing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::QuantumKernel => "quantum_kernel",
            LearnerKind::Preprocessing => "preprocessing",
            LearnerKind::Classical => "classical",
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum_kernel" => Ok(LearnerKind::QuantumKernel),
            "preprocessing" => Ok(LearnerKind::Preprocessing),
            "classical" => Ok(LearnerKind::Classical),
            other => Err(Error::Config(format!("unknown learner '{other}'"))),
        }
    }
}

/// Fixed knobs of a complexity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    /// Training-set size, held fixed across N.
    pub m: usize,
    /// Shots per kernel estimate for the quantum-kernel learner.
    pub shots: u64,
    pub c: f64,
    /// Test points classified per trial.
    pub test_points: usize,
    /// Classical probe budget as a fraction of N. 0.49 reaches 99% accuracy
    /// for the brute-force strategy.
    pub classical_fraction: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            m: 16,
            shots: 100,
            c: 1.0,
            test_points: 20,
            classical_fraction: 0.49,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub learner: LearnerKind,
    pub domain_size: usize,
    /// Mean oracle plus classical queries to classify one new point.
    pub mean_queries: f64,
    /// Mean support-vector count `d` (SVM learners only).
    pub mean_support: f64,
}

/// Runs one learner at each `N` and records the mean per-classification
/// query cost over `trials` seeded trials. Uses the ideal backend.
pub fn complexity_sweep(
    kind: LearnerKind,
    domain_sizes: &[usize],
    trials: usize,
    rng_seed: u64,
    params: &SweepParams,
) -> Result<Vec<SweepRow>> {
    let config = GroverConfig::ideal();
    let settings = SvmSettings {
        c: params.c,
        ..SvmSettings::default()
    };
    let mut rows = Vec::with_capacity(domain_sizes.len());
    for &n in domain_sizes {
        if !(n.is_power_of_two() && n >= 8) {
            return Err(Error::UnsupportedSize(n));
        }
        let mut queries = Vec::with_capacity(trials);
        let mut support = Vec::with_capacity(trials);
        for trial in 0..trials {
            let seed = derive_seed(rng_seed, &[kind as u64, n as u64, trial as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let concept = Concept::new(rng.random_range(0..n / 2), n)?;
            let test = balanced_test_set(&concept, params.test_points, derive_seed(seed, &[1]))?;
            let outcome = match kind {
                LearnerKind::Classical => {
                    let budget = ((params.classical_fraction * n as f64).ceil() as usize).min(n);
                    classical_learner(&concept, &test.oracles, budget, derive_seed(seed, &[2]))?
                }
                LearnerKind::QuantumKernel | LearnerKind::Preprocessing => {
                    let train = generate_dataset(&concept, params.m.min(n), derive_seed(seed, &[3]))?;
                    let width = default_width(train.len(), n);
                    if kind == LearnerKind::QuantumKernel {
                        quantum_kernel_learner(
                            &train,
                            &test.oracles,
                            width,
                            params.shots,
                            settings,
                            &config,
                            derive_seed(seed, &[4]),
                        )?
                    } else {
                        preprocessing_learner(
                            &train,
                            &test.oracles,
                            width,
                            settings,
                            &config,
                            derive_seed(seed, &[4]),
                        )?
                    }
                }
            };
            queries.push(outcome.queries_per_classification());
            support.push(outcome.support_count as f64);
        }
        rows.push(SweepRow {
            learner: kind,
            domain_size: n,
            mean_queries: crate::stats::mean(&queries),
            mean_support: crate::stats::mean(&support),
        });
    }
    Ok(rows)
}
