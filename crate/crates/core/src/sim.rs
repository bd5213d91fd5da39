//! Dense statevector simulator.
//!
//! Qubit 0 is the least-significant bit of the basis index. A register is an
//! ordered list of qubits whose first entry is the register's lowest-order bit.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{check_qubit_cap, contract, structural, Result};
use crate::ledger::QueryCounter;

const NORM_TOLERANCE: f64 = 1e-9;

/// Normalized amplitudes over `num_qubits` qubits.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let support: Vec<_> = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 1e-12)
            .take(16)
            .collect();
        f.debug_struct("StateVector")
            .field("num_qubits", &self.num_qubits)
            .field("support", &support)
            .finish()
    }
}

impl StateVector {
    /// The all-zero basis state.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(structural("a state needs at least one qubit"));
        }
        check_qubit_cap(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(structural(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes, rejecting wrong lengths and non-unit norms.
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(structural("a state needs at least one qubit"));
        }
        check_qubit_cap(num_qubits)?;
        if amplitudes.len() != 1usize << num_qubits {
            return Err(structural(format!(
                "expected {} amplitudes for {num_qubits} qubits, got {}",
                1usize << num_qubits,
                amplitudes.len()
            )));
        }
        let state = Self {
            num_qubits,
            amplitudes,
        };
        state.check_normalized()?;
        Ok(state)
    }

    /// Normalizes `amplitudes` before wrapping them.
    pub fn normalized(num_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(contract("cannot normalize a zero or non-finite vector"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(num_qubits, amplitudes)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(structural("inner product of states with different sizes"));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Largest amplitude-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(contract(format!("state norm² is {n}, expected 1")));
        }
        Ok(())
    }

    fn check_register(&self, register: &[usize]) -> Result<()> {
        for (pos, &q) in register.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(structural(format!(
                    "qubit {q} out of range for {} qubits",
                    self.num_qubits
                )));
            }
            if register[..pos].contains(&q) {
                return Err(structural(format!("qubit {q} repeated in register")));
            }
        }
        Ok(())
    }
}

/// Value of `register` in basis state `index`.
#[inline]
pub fn register_value(index: usize, register: &[usize]) -> usize {
    register
        .iter()
        .enumerate()
        .fold(0, |acc, (b, &q)| acc | (((index >> q) & 1) << b))
}

/// Basis-index bits that encode `value` on `register`.
#[inline]
pub fn scatter(value: usize, register: &[usize]) -> usize {
    register
        .iter()
        .enumerate()
        .fold(0, |acc, (b, &q)| acc | (((value >> b) & 1) << q))
}

fn register_mask(register: &[usize]) -> usize {
    register.iter().fold(0, |acc, &q| acc | (1 << q))
}

pub type Predicate = Arc<dyn Fn(usize) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Hadamard,
    PauliX,
    ControlledNot,
    MultiControlledX,
    PhaseOracle,
    DiffusionOnRegister,
    SubsetReflection,
}

/// A unitary on a subset of qubits. Every kind here is its own inverse.
#[derive(Clone)]
pub enum Gate {
    Hadamard {
        target: usize,
    },
    PauliX {
        target: usize,
    },
    ControlledNot {
        control: usize,
        target: usize,
    },
    MultiControlledX {
        controls: Vec<usize>,
        target: usize,
    },
    /// Sign flip on every basis state whose `register` value satisfies
    /// `predicate`.
    PhaseOracle {
        register: Vec<usize>,
        predicate: Predicate,
    },
    /// `2|u⟩⟨u| − 1` on `register`, `u` the uniform superposition.
    DiffusionOnRegister {
        register: Vec<usize>,
    },
    /// Householder reflection on `register` that swaps `|0⟩` with the uniform
    /// superposition over `marked`. Realizes an idealized search that returns
    /// an even superposition of several marked elements.
    SubsetReflection {
        register: Vec<usize>,
        marked: Vec<usize>,
    },
}

impl fmt::Debug for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}(targets={:?}, controls={:?})",
            self.kind(),
            self.targets(),
            self.controls()
        )
    }
}

impl Gate {
    pub fn h(target: usize) -> Self {
        Gate::Hadamard { target }
    }

    pub fn x(target: usize) -> Self {
        Gate::PauliX { target }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::ControlledNot { control, target }
    }

    pub fn mcx(controls: Vec<usize>, target: usize) -> Self {
        Gate::MultiControlledX { controls, target }
    }

    pub fn phase_oracle<F>(register: Vec<usize>, predicate: F) -> Self
    where
        F: Fn(usize) -> bool + Send + Sync + 'static,
    {
        Gate::PhaseOracle {
            register,
            predicate: Arc::new(predicate),
        }
    }

    pub fn diffusion(register: Vec<usize>) -> Self {
        Gate::DiffusionOnRegister { register }
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Hadamard { .. } => GateKind::Hadamard,
            Gate::PauliX { .. } => GateKind::PauliX,
            Gate::ControlledNot { .. } => GateKind::ControlledNot,
            Gate::MultiControlledX { .. } => GateKind::MultiControlledX,
            Gate::PhaseOracle { .. } => GateKind::PhaseOracle,
            Gate::DiffusionOnRegister { .. } => GateKind::DiffusionOnRegister,
            Gate::SubsetReflection { .. } => GateKind::SubsetReflection,
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match self {
            Gate::Hadamard { target }
            | Gate::PauliX { target }
            | Gate::ControlledNot { target, .. }
            | Gate::MultiControlledX { target, .. } => vec![*target],
            Gate::PhaseOracle { register, .. }
            | Gate::DiffusionOnRegister { register }
            | Gate::SubsetReflection { register, .. } => register.clone(),
        }
    }

    pub fn controls(&self) -> Vec<usize> {
        match self {
            Gate::ControlledNot { control, .. } => vec![*control],
            Gate::MultiControlledX { controls, .. } => controls.clone(),
            _ => Vec::new(),
        }
    }

    /// Checks that indices are in range, distinct, and targets and controls
    /// are disjoint.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let targets = self.targets();
        let controls = self.controls();
        if targets.is_empty() {
            return Err(structural(format!("{:?} has no target qubits", self.kind())));
        }
        let all: Vec<usize> = targets.iter().chain(&controls).copied().collect();
        for (pos, &q) in all.iter().enumerate() {
            if q >= num_qubits {
                return Err(structural(format!(
                    "{:?} touches qubit {q}, circuit has {num_qubits}",
                    self.kind()
                )));
            }
            if all[..pos].contains(&q) {
                return Err(structural(format!(
                    "{:?} uses qubit {q} more than once",
                    self.kind()
                )));
            }
        }
        if let Gate::SubsetReflection { register, marked } = self {
            let dim = 1usize << register.len();
            if marked.is_empty() {
                return Err(structural("subset reflection needs a marked element"));
            }
            if let Some(&bad) = marked.iter().find(|&&m| m >= dim) {
                return Err(structural(format!(
                    "marked value {bad} does not fit a {}-qubit register",
                    register.len()
                )));
            }
        }
        Ok(())
    }

    /// Every supported gate is an involution.
    pub fn inverse(&self) -> Gate {
        self.clone()
    }

    fn apply_in_place(&self, amps: &mut [Complex64]) {
        match self {
            Gate::Hadamard { target } => {
                let bit = 1usize << target;
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..amps.len() {
                    if i & bit == 0 {
                        let (a, b) = (amps[i], amps[i | bit]);
                        amps[i] = (a + b) * s;
                        amps[i | bit] = (a - b) * s;
                    }
                }
            }
            Gate::PauliX { target } => flip_where(amps, 0, 1 << target),
            Gate::ControlledNot { control, target } => flip_where(amps, 1 << control, 1 << target),
            Gate::MultiControlledX { controls, target } => {
                flip_where(amps, register_mask(controls), 1 << target)
            }
            Gate::PhaseOracle {
                register,
                predicate,
            } => {
                let marks: Vec<bool> = (0..1usize << register.len())
                    .map(|v| predicate(v))
                    .collect();
                for (i, a) in amps.iter_mut().enumerate() {
                    if marks[register_value(i, register)] {
                        *a = -*a;
                    }
                }
            }
            Gate::DiffusionOnRegister { register } => {
                let mask = register_mask(register);
                let offsets: Vec<usize> =
                    (0..1usize << register.len()).map(|v| scatter(v, register)).collect();
                let inv = 1.0 / offsets.len() as f64;
                for base in 0..amps.len() {
                    if base & mask != 0 {
                        continue;
                    }
                    let mean: Complex64 =
                        offsets.iter().map(|&o| amps[base | o]).sum::<Complex64>() * inv;
                    for &o in &offsets {
                        amps[base | o] = mean * 2.0 - amps[base | o];
                    }
                }
            }
            Gate::SubsetReflection { register, marked } => {
                subset_reflection(amps, register, marked)
            }
        }
    }
}

/// X on `target` wherever all `control_mask` bits are set.
fn flip_where(amps: &mut [Complex64], control_mask: usize, target_bit: usize) {
    for i in 0..amps.len() {
        if i & target_bit == 0 && i & control_mask == control_mask {
            amps.swap(i, i | target_bit);
        }
    }
}

fn subset_reflection(amps: &mut [Complex64], register: &[usize], marked: &[usize]) {
    let mut marked = marked.to_vec();
    marked.sort_unstable();
    marked.dedup();
    if marked == [0] {
        return;
    }
    // v = (|0⟩ − |m⟩)/‖·‖ with |m⟩ uniform over `marked`; apply 1 − 2|v⟩⟨v|.
    let w = 1.0 / (marked.len() as f64).sqrt();
    let mut support: Vec<(usize, f64)> = vec![(0, 1.0)];
    for &m in &marked {
        if m == 0 {
            support[0].1 -= w;
        } else {
            support.push((m, -w));
        }
    }
    let norm = support.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    let support: Vec<(usize, f64)> = support
        .into_iter()
        .map(|(m, c)| (scatter(m, register), c / norm))
        .collect();
    let mask = register_mask(register);
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        let dot: Complex64 = support.iter().map(|&(o, c)| amps[base | o] * c).sum();
        for &(o, c) in &support {
            amps[base | o] -= dot * (2.0 * c);
        }
    }
}

/// Applies `gate` to `state`, returning the image.
pub fn apply(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    gate.validate(state.num_qubits)?;
    state.check_normalized()?;
    let mut out = state.clone();
    gate.apply_in_place(&mut out.amplitudes);
    Ok(out)
}

/// An ordered gate list plus the oracle queries one execution costs.
#[derive(Debug, Clone)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    charges: Vec<(QueryCounter, u64)>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(structural("a circuit needs at least one qubit"));
        }
        check_qubit_cap(num_qubits)?;
        Ok(Self {
            num_qubits,
            gates: Vec::new(),
            charges: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    /// Appends `other`, including its query charges.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits > self.num_qubits {
            return Err(structural(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.num_qubits, self.num_qubits
            )));
        }
        self.gates.extend(other.gates.iter().cloned());
        self.charges.extend(other.charges.iter().cloned());
        Ok(self)
    }

    /// Records that each execution costs `queries` calls to `counter`'s oracle.
    pub fn charge(&mut self, counter: &QueryCounter, queries: u64) {
        if queries == 0 {
            return;
        }
        match self.charges.iter_mut().find(|(c, _)| c.same_as(counter)) {
            Some((_, q)) => *q += queries,
            None => self.charges.push((counter.clone(), queries)),
        }
    }

    /// Oracle queries billed per execution.
    pub fn queries_per_run(&self) -> u64 {
        self.charges.iter().map(|(_, q)| q).sum()
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            charges: self.charges.clone(),
        }
    }
}

/// Runs every gate of `circuit` on `initial` in order and bills its oracle
/// charges once.
pub fn run(circuit: &Circuit, initial: &StateVector) -> Result<StateVector> {
    if circuit.num_qubits != initial.num_qubits {
        return Err(structural(format!(
            "circuit has {} qubits, state has {}",
            circuit.num_qubits, initial.num_qubits
        )));
    }
    initial.check_normalized()?;
    let mut out = initial.clone();
    for gate in &circuit.gates {
        gate.apply_in_place(&mut out.amplitudes);
    }
    for (counter, q) in &circuit.charges {
        counter.charge(*q);
    }
    Ok(out)
}

/// Probability that every qubit of `register` reads 0.
pub fn prob_all_zero(state: &StateVector, register: &[usize]) -> Result<f64> {
    if register.is_empty() {
        return Err(structural("empty register"));
    }
    state.check_register(register)?;
    let mask = register_mask(register);
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Born distribution of `register`, indexed by register value.
pub fn register_distribution(state: &StateVector, register: &[usize]) -> Result<Vec<f64>> {
    if register.is_empty() {
        return Err(structural("empty register"));
    }
    state.check_register(register)?;
    let mut probs = vec![0.0; 1 << register.len()];
    for (i, a) in state.amplitudes.iter().enumerate() {
        probs[register_value(i, register)] += a.norm_sqr();
    }
    Ok(probs)
}

/// Histogram of `shots` i.i.d. measurements of `register`, keyed by register
/// value. Reproducible for a given seed.
pub fn sample_measurement(
    state: &StateVector,
    register: &[usize],
    shots: u64,
    rng_seed: u64,
) -> Result<BTreeMap<usize, u64>> {
    if shots == 0 {
        return Err(structural("shots must be at least 1"));
    }
    let probs = register_distribution(state, register)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    // Multinomial draw as a chain of conditional binomials.
    let mut histogram = BTreeMap::new();
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    for (value, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let is_last = probs[value + 1..].iter().all(|&q| q <= 0.0);
        let count = if is_last || p >= mass_left {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(&mut rng)
        };
        if count > 0 {
            histogram.insert(value, count);
        }
        remaining -= count;
        mass_left -= p;
    }
    Ok(histogram)
}

/// Register value rendered as a bitstring, register qubit 0 first.
pub fn bitstring(value: usize, width: usize) -> String {
    (0..width)
        .map(|b| if (value >> b) & 1 == 1 { '1' } else { '0' })
        .collect()
}
