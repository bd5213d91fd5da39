//! Quantum pattern matching over a binary text, its interval feature map and
//! kernel, and a KMP baseline.
//!
//! The matcher acts on `n + N + L` qubits: index register `0..n`, text
//! register `n..n+N` (text bit `i` on qubit `n + i`), pattern register after
//! that. The feature map prepends an `n`-qubit data register and shifts the
//! matcher block up by `n`.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_qubit_cap, exact_log2, structural, Error, Result};
use crate::grover::{
    adder_gates, check_interval_width, interval_state_analytic, split_ancilla, GroverBackend,
    GroverConfig, RegisterSplit,
};
use crate::kernel::{kernel_exact, kernel_sampled, KernelMode};
use crate::sim::{self, Circuit, Gate, StateVector};

/// Parses a string of `'0'`/`'1'` characters, first character first.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(structural(format!("non-binary character {other:?}"))),
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Start positions of every cyclic occurrence of `pattern` in `text`.
pub fn cyclic_occurrences(text: &[bool], pattern: &[bool]) -> Vec<usize> {
    let n = text.len();
    if pattern.is_empty() || pattern.len() > n {
        return Vec::new();
    }
    (0..n)
        .filter(|&k| pattern.iter().enumerate().all(|(j, &p)| text[(k + j) % n] == p))
        .collect()
}

/// A text with exactly one cyclic occurrence of the pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextInstance {
    text: Vec<bool>,
    pattern: Vec<bool>,
    location: usize,
}

impl TextInstance {
    pub fn new(text: Vec<bool>, pattern: Vec<bool>) -> Result<Self> {
        if exact_log2(text.len()).is_none_or(|n| n < 1) {
            return Err(Error::UnsupportedSize(text.len()));
        }
        if pattern.is_empty() || pattern.len() > text.len() {
            return Err(structural(format!(
                "pattern length {} must lie in 1..={}",
                pattern.len(),
                text.len()
            )));
        }
        match cyclic_occurrences(&text, &pattern)[..] {
            [] => Err(Error::NoOccurrence),
            [location] => Ok(Self {
                text,
                pattern,
                location,
            }),
            ref many => Err(Error::MultipleOccurrences(many.len())),
        }
    }

    pub fn parse(text: &str, pattern: &str) -> Result<Self> {
        Self::new(parse_bits(text)?, parse_bits(pattern)?)
    }

    pub fn text(&self) -> &[bool] {
        &self.text
    }

    pub fn pattern(&self) -> &[bool] {
        &self.pattern
    }

    pub fn location(&self) -> usize {
        self.location
    }

    pub fn domain_size(&self) -> usize {
        self.text.len()
    }

    pub fn index_qubits(&self) -> usize {
        self.text.len().trailing_zeros() as usize
    }

    /// `n + N + L`.
    pub fn matcher_qubits(&self) -> usize {
        self.index_qubits() + self.text.len() + self.pattern.len()
    }
}

/// Random text of length `N` holding `pattern` exactly once, at `location`.
pub fn random_instance(
    domain_size: usize,
    pattern: &[bool],
    location: usize,
    rng: &mut impl Rng,
) -> Result<TextInstance> {
    if location >= domain_size {
        return Err(structural(format!("location {location} outside Z_{domain_size}")));
    }
    for _ in 0..10_000 {
        let mut text: Vec<bool> = (0..domain_size).map(|_| rng.random()).collect();
        for (j, &p) in pattern.iter().enumerate() {
            text[(location + j) % domain_size] = p;
        }
        match TextInstance::new(text, pattern.to_vec()) {
            Ok(instance) => return Ok(instance),
            Err(Error::MultipleOccurrences(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateProblem(format!(
        "could not place a unique occurrence of a length-{} pattern in N = {domain_size}",
        pattern.len()
    )))
}

/// Time steps, amplification rounds and classical comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternLedger {
    pub gate_steps: u64,
    pub amplification_rounds: u64,
    pub classical_char_comparisons: u64,
}

impl Add for PatternLedger {
    type Output = PatternLedger;

    fn add(self, rhs: Self) -> Self {
        PatternLedger {
            gate_steps: self.gate_steps + rhs.gate_steps,
            amplification_rounds: self.amplification_rounds + rhs.amplification_rounds,
            classical_char_comparisons: self.classical_char_comparisons
                + rhs.classical_char_comparisons,
        }
    }
}

impl AddAssign for PatternLedger {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

fn ceil_log2(x: usize) -> u64 {
    x.next_power_of_two().trailing_zeros() as u64
}

/// Depth of the cyclic shift: per index bit, two layers of disjoint
/// controlled swaps, each three gates deep plus a fan-out and fan-in of the
/// control bit over `n` levels.
pub fn shift_steps(n: usize) -> u64 {
    let n = n as u64;
    n * 2 * (2 * n + 3)
}

/// `⌊π/4 · √N⌋`.
pub fn amplification_rounds(domain_size: usize) -> usize {
    (PI / 4.0 * (domain_size as f64).sqrt()).floor() as usize
}

/// Symbolic step count of the full matcher. Both backends report the
/// faithful algorithm's cost.
pub fn matcher_ledger(domain_size: usize, pattern_len: usize) -> PatternLedger {
    let n = domain_size.trailing_zeros() as usize;
    let s = shift_steps(n);
    let rounds = amplification_rounds(domain_size) as u64;
    let mark = ceil_log2(pattern_len) + 1;
    let diffusion = 2 + ceil_log2(n) + 1;
    // encode, Hadamards, shift, xor; then per round mark, xor, unshift,
    // diffuse, shift, xor.
    let prepare = 1 + 1 + s + 1;
    let round = mark + 1 + s + diffusion + s + 1;
    PatternLedger {
        gate_steps: prepare + rounds * round,
        amplification_rounds: rounds,
        classical_char_comparisons: 0,
    }
}

fn controlled_swap(control: usize, a: usize, b: usize) -> [Gate; 3] {
    [Gate::cnot(b, a), Gate::mcx(vec![control, a], b), Gate::cnot(b, a)]
}

/// Gates rotating `text` left by `2^b` when index qubit `control` is set:
/// reverse both blocks, then reverse the whole register.
fn controlled_rotation(control: usize, text: &[usize], shift: usize) -> Vec<Gate> {
    let n = text.len();
    let mut pairs: Vec<(usize, usize)> = (0..shift / 2).map(|i| (i, shift - 1 - i)).collect();
    pairs.extend((0..(n - shift) / 2).map(|i| (shift + i, n - 1 - i)));
    pairs.extend((0..n / 2).map(|i| (i, n - 1 - i)));
    pairs
        .into_iter()
        .flat_map(|(a, b)| controlled_swap(control, text[a], text[b]))
        .collect()
}

fn shift_gates(index: &[usize], text: &[usize]) -> Vec<Gate> {
    index
        .iter()
        .enumerate()
        .flat_map(|(b, &q)| controlled_rotation(q, text, 1 << b))
        .collect()
}

/// The shift operator `S|k⟩|t_0…t_{N−1}⟩ = |k⟩|t_k…t_{k+N−1}⟩` on `n + N`
/// qubits (index register first).
pub fn cyclic_shift_circuit(n: usize, domain_size: usize) -> Result<Circuit> {
    if exact_log2(domain_size) != Some(n) || n == 0 {
        return Err(structural(format!("N = {domain_size} is not 2^{n}")));
    }
    let index: Vec<usize> = (0..n).collect();
    let text: Vec<usize> = (n..n + domain_size).collect();
    let mut circuit = Circuit::new(n + domain_size)?;
    circuit.extend(shift_gates(&index, &text))?;
    Ok(circuit)
}

/// Qubit layout of a matcher block starting at `offset`.
struct Layout {
    index: Vec<usize>,
    text: Vec<usize>,
    pattern: Vec<usize>,
}

impl Layout {
    fn new(instance: &TextInstance, offset: usize) -> Self {
        let n = instance.index_qubits();
        let nn = instance.domain_size();
        let l = instance.pattern.len();
        Self {
            index: (offset..offset + n).collect(),
            text: (offset + n..offset + n + nn).collect(),
            pattern: (offset + n + nn..offset + n + nn + l).collect(),
        }
    }
}

fn encode_gates(instance: &TextInstance, layout: &Layout) -> Vec<Gate> {
    let bits = instance.text.iter().zip(&layout.text);
    let pattern = instance.pattern.iter().zip(&layout.pattern);
    bits.chain(pattern)
        .filter(|(&bit, _)| bit)
        .map(|(_, &q)| Gate::x(q))
        .collect()
}

fn xor_gates(layout: &Layout) -> Vec<Gate> {
    layout
        .pattern
        .iter()
        .zip(&layout.text)
        .map(|(&p, &t)| Gate::cnot(t, p))
        .collect()
}

/// The whole matcher, including the encoding, ending with the index
/// register holding (approximately) the match location.
fn matcher_gates(
    instance: &TextInstance,
    layout: &Layout,
    backend: GroverBackend,
    rounds: usize,
) -> Vec<Gate> {
    let mut gates = encode_gates(instance, layout);
    let shift = shift_gates(&layout.index, &layout.text);
    let xor = xor_gates(layout);
    match backend {
        GroverBackend::Ideal => {
            gates.extend(
                layout
                    .index
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| (instance.location >> b) & 1 == 1)
                    .map(|(_, &q)| Gate::x(q)),
            );
            gates.extend(shift);
            gates.extend(xor);
        }
        GroverBackend::Faithful => {
            gates.extend(layout.index.iter().map(|&q| Gate::h(q)));
            gates.extend(shift.iter().cloned());
            gates.extend(xor.iter().cloned());
            for _ in 0..rounds {
                gates.push(Gate::phase_oracle(layout.pattern.clone(), |v| v == 0));
                gates.extend(xor.iter().cloned());
                gates.extend(shift.iter().rev().cloned());
                gates.push(Gate::diffusion(layout.index.clone()));
                gates.extend(shift.iter().cloned());
                gates.extend(xor.iter().cloned());
            }
        }
    }
    gates
}

/// Circuit of the matcher on `n + N + L` qubits, starting from all zeros.
pub fn matcher_circuit(instance: &TextInstance, config: &GroverConfig) -> Result<Circuit> {
    check_qubit_cap(instance.matcher_qubits())?;
    let layout = Layout::new(instance, 0);
    let rounds = config
        .iterations
        .unwrap_or_else(|| amplification_rounds(instance.domain_size()));
    let mut circuit = Circuit::new(instance.matcher_qubits())?;
    circuit.extend(matcher_gates(instance, &layout, config.backend, rounds))?;
    Ok(circuit)
}

/// Prepared state `|0ⁿ⟩|T⟩|P⟩`.
pub fn encode(instance: &TextInstance) -> Result<StateVector> {
    check_qubit_cap(instance.matcher_qubits())?;
    let layout = Layout::new(instance, 0);
    let mut circuit = Circuit::new(instance.matcher_qubits())?;
    circuit.extend(encode_gates(instance, &layout))?;
    sim::run(&circuit, &StateVector::zero(instance.matcher_qubits())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMatch {
    /// Measured index register.
    pub location: usize,
    /// Whether the measured index is a genuine occurrence.
    pub verified: bool,
    /// Probability of measuring the true location.
    pub success_probability: f64,
    pub ledger: PatternLedger,
}

/// Runs the matcher and measures the index register once.
///
/// Instances within the qubit cap are simulated gate by gate. Larger ones
/// use the closed form of amplitude amplification: the true location with
/// probability `sin²((2r+1)θ)`, every other index equally likely.
pub fn pattern_match(
    instance: &TextInstance,
    config: &GroverConfig,
    rng_seed: u64,
) -> Result<PatternMatch> {
    let nn = instance.domain_size();
    let rounds = config
        .iterations
        .unwrap_or_else(|| amplification_rounds(nn));
    let mut ledger = matcher_ledger(nn, instance.pattern.len());
    ledger.amplification_rounds = rounds as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let (location, success_probability) = if instance.matcher_qubits() <= crate::MAX_QUBITS {
        let layout = Layout::new(instance, 0);
        let gates = matcher_gates(instance, &layout, config.backend, rounds);
        let mut circuit = Circuit::new(instance.matcher_qubits())?;
        circuit.extend(gates)?;
        let out = sim::run(&circuit, &StateVector::zero(instance.matcher_qubits())?)?;
        let probs = sim::register_distribution(&out, &layout.index)?;
        let location = sample_index(&probs, &mut rng);
        (location, probs[instance.location])
    } else {
        let p = match config.backend {
            GroverBackend::Ideal => 1.0,
            GroverBackend::Faithful => {
                let theta = (1.0 / nn as f64).sqrt().asin();
                ((2 * rounds + 1) as f64 * theta).sin().powi(2)
            }
        };
        let location = if rng.random::<f64>() < p {
            instance.location
        } else {
            let other = rng.random_range(0..nn - 1);
            if other >= instance.location { other + 1 } else { other }
        };
        (location, p)
    };
    Ok(PatternMatch {
        location,
        verified: location == instance.location,
        success_probability,
        ledger,
    })
}

fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Feature map `U_P(T)` on `2n + N + L` qubits: data register `0..n`,
/// matcher block above it.
pub fn pattern_feature_map_circuit(
    instance: &TextInstance,
    width: usize,
    config: &GroverConfig,
) -> Result<Circuit> {
    let mu = check_interval_width(width, instance.domain_size())?;
    let n = instance.index_qubits();
    let total = n + instance.matcher_qubits();
    check_qubit_cap(total)?;
    let layout = Layout::new(instance, n);
    let data: Vec<usize> = (0..n).collect();
    let rounds = config
        .iterations
        .unwrap_or_else(|| amplification_rounds(instance.domain_size()));
    let matcher = matcher_gates(instance, &layout, config.backend, rounds);
    let mut circuit = Circuit::new(total)?;
    circuit.extend(data[..mu].iter().map(|&q| Gate::h(q)))?;
    circuit.extend(matcher.iter().cloned())?;
    circuit.extend(adder_gates(&data, &layout.index))?;
    circuit.extend(matcher.iter().rev().map(Gate::inverse))?;
    Ok(circuit)
}

/// How a pattern feature map or kernel is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Classical match plus the closed-form interval state.
    Analytic,
    Circuit,
}

/// Data-register state of `U_P(T)|0⟩` and the probability that the matcher
/// block came back to all zeros.
pub fn pattern_feature_map(
    instance: &TextInstance,
    width: usize,
    mode: FeatureMode,
    config: &GroverConfig,
) -> Result<RegisterSplit> {
    match mode {
        FeatureMode::Analytic => {
            check_interval_width(width, instance.domain_size())?;
            Ok(RegisterSplit {
                register: interval_state_analytic(instance.location, width, instance.domain_size())?,
                ancilla_zero_fidelity: 1.0,
            })
        }
        FeatureMode::Circuit => {
            let circuit = pattern_feature_map_circuit(instance, width, config)?;
            let out = sim::run(&circuit, &StateVector::zero(circuit.num_qubits())?)?;
            split_ancilla(&out, instance.index_qubits())
        }
    }
}

/// Interval kernel between two texts sharing a pattern: `kernel_exact` of the
/// match locations, or the all-zero probability of `U_P(T_b)† U_P(T_a)` on
/// the data register in circuit modes.
pub fn pattern_kernel(
    a: &TextInstance,
    b: &TextInstance,
    width: usize,
    mode: KernelMode,
    rng_seed: u64,
) -> Result<f64> {
    if a.domain_size() != b.domain_size() {
        return Err(structural("texts have different lengths"));
    }
    if a.pattern != b.pattern {
        return Err(structural("texts are matched against different patterns"));
    }
    let n = a.domain_size();
    match mode {
        KernelMode::Exact => kernel_exact(a.location, b.location, width, n),
        KernelMode::Sampled { shots } => {
            kernel_sampled(kernel_exact(a.location, b.location, width, n)?, shots, rng_seed)
        }
        KernelMode::CircuitIdeal | KernelMode::CircuitFaithful => {
            let config = if mode == KernelMode::CircuitIdeal {
                GroverConfig::ideal()
            } else {
                GroverConfig::faithful()
            };
            let mut circuit = pattern_feature_map_circuit(a, width, &config)?;
            circuit.append(&pattern_feature_map_circuit(b, width, &config)?.inverse())?;
            let out = sim::run(&circuit, &StateVector::zero(circuit.num_qubits())?)?;
            let data: Vec<usize> = (0..a.index_qubits()).collect();
            sim::prob_all_zero(&out, &data)
        }
    }
}

/// First cyclic occurrence of `pattern` by Knuth–Morris–Pratt over the text
/// extended by its first `L − 1` characters. Every character comparison,
/// including those building the failure table, is counted.
pub fn kmp_search(text: &[bool], pattern: &[bool]) -> (Option<usize>, PatternLedger) {
    let mut ledger = PatternLedger::default();
    let (n, l) = (text.len(), pattern.len());
    if l == 0 || l > n {
        return (None, ledger);
    }
    let mut fail = vec![0usize; l];
    let mut k = 0;
    for i in 1..l {
        loop {
            ledger.classical_char_comparisons += 1;
            if pattern[i] == pattern[k] {
                k += 1;
                break;
            }
            if k == 0 {
                break;
            }
            k = fail[k - 1];
        }
        fail[i] = k;
    }
    let mut q = 0;
    for i in 0..n + l - 1 {
        let c = text[i % n];
        loop {
            ledger.classical_char_comparisons += 1;
            if c == pattern[q] {
                q += 1;
                break;
            }
            if q == 0 {
                break;
            }
            q = fail[q - 1];
        }
        if q == l {
            return (Some(i + 1 - l), ledger);
        }
    }
    (None, ledger)
}

/// State of the matcher after encode, Hadamards, shift and XOR, for tests
/// of the branch structure.
fn prepared_state(instance: &TextInstance) -> Result<StateVector> {
    let layout = Layout::new(instance, 0);
    let mut gates = encode_gates(instance, &layout);
    gates.extend(layout.index.iter().map(|&q| Gate::h(q)));
    gates.extend(shift_gates(&layout.index, &layout.text));
    gates.extend(xor_gates(&layout));
    let mut circuit = Circuit::new(instance.matcher_qubits())?;
    circuit.extend(gates)?;
    sim::run(&circuit, &StateVector::zero(instance.matcher_qubits())?)
}

/// For each index value `k` of the prepared superposition, the pattern
/// register content `P ⊕ (t_k … t_{k+L−1})`.
pub fn xor_register_by_shift(instance: &TextInstance) -> Result<Vec<usize>> {
    let layout = Layout::new(instance, 0);
    let state = prepared_state(instance)?;
    let mut out = vec![usize::MAX; instance.domain_size()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() > 1e-12 {
            let k = sim::register_value(i, &layout.index);
            out[k] = sim::register_value(i, &layout.pattern);
        }
    }
    Ok(out)
}
