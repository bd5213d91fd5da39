//! Indicator oracles, Grover search, the ripple adder and the interval-state
//! feature map built from them.
//!
//! Register layout for the feature map on `2n` qubits: qubits `0..n` hold the
//! data register (where the interval state ends up) and qubits `n..2n` the
//! ancilla register that Grover writes the marked element into.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_qubit_cap, exact_log2, structural, Error, Result};
use crate::ledger::{QueryCounter, QueryLedger};
use crate::sim::{self, Circuit, Gate, StateVector};

fn domain_qubits(domain_size: usize) -> Result<usize> {
    match exact_log2(domain_size) {
        Some(n) if n >= 2 => Ok(n),
        _ => Err(Error::UnsupportedSize(domain_size)),
    }
}

/// Black-box indicator of a single element of `Z_N`, with a query counter.
///
/// Clones share the counter.
#[derive(Debug, Clone)]
pub struct IndicatorOracle {
    domain_size: usize,
    marked: usize,
    queries: QueryCounter,
}

impl IndicatorOracle {
    pub fn new(domain_size: usize, marked: usize) -> Result<Self> {
        domain_qubits(domain_size)?;
        if marked >= domain_size {
            return Err(structural(format!(
                "marked element {marked} outside Z_{domain_size}"
            )));
        }
        Ok(Self {
            domain_size,
            marked,
            queries: QueryCounter::new(),
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn num_qubits(&self) -> usize {
        self.domain_size.trailing_zeros() as usize
    }

    /// One classical query.
    pub fn evaluate(&self, x: usize) -> bool {
        self.queries.charge(1);
        x == self.marked
    }

    pub fn query_count(&self) -> u64 {
        self.queries.get()
    }

    pub fn counter(&self) -> &QueryCounter {
        &self.queries
    }

    /// Uncharged access to the hidden element, for the simulator's ideal
    /// backend and analytic evaluation paths.
    pub fn reveal_marked(&self) -> usize {
        self.marked
    }
}

/// Indicator of a set of elements. Exists to demonstrate why the feature map
/// requires a single marked element.
#[derive(Debug, Clone)]
pub struct MultiMarkedOracle {
    domain_size: usize,
    marked: BTreeSet<usize>,
    queries: QueryCounter,
}

impl MultiMarkedOracle {
    pub fn new(domain_size: usize, marked: impl IntoIterator<Item = usize>) -> Result<Self> {
        domain_qubits(domain_size)?;
        let marked: BTreeSet<usize> = marked.into_iter().collect();
        if marked.is_empty() {
            return Err(structural("marked set must be nonempty"));
        }
        if let Some(&bad) = marked.iter().find(|&&m| m >= domain_size) {
            return Err(structural(format!("marked element {bad} outside Z_{domain_size}")));
        }
        Ok(Self {
            domain_size,
            marked,
            queries: QueryCounter::new(),
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn evaluate(&self, x: usize) -> bool {
        self.queries.charge(1);
        self.marked.contains(&x)
    }

    pub fn marked_set(&self) -> &BTreeSet<usize> {
        &self.marked
    }

    pub fn query_count(&self) -> u64 {
        self.queries.get()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroverBackend {
    /// Writes the marked element exactly; still billed as `k` oracle queries.
    #[default]
    Ideal,
    /// Genuine amplitude amplification with its `O(1/N)` residual.
    Faithful,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroverConfig {
    pub backend: GroverBackend,
    /// Overrides the optimal iteration count.
    pub iterations: Option<usize>,
}

impl GroverConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn faithful() -> Self {
        Self {
            backend: GroverBackend::Faithful,
            iterations: None,
        }
    }

    pub fn iterations_for(&self, marked_count: usize, domain_size: usize) -> usize {
        self.iterations
            .unwrap_or_else(|| optimal_iterations(marked_count, domain_size))
    }
}

/// `round(π/(4θ) − 1/2)` with `θ = arcsin(√(t/N))`.
pub fn optimal_iterations(marked_count: usize, domain_size: usize) -> usize {
    let theta = (marked_count as f64 / domain_size as f64).sqrt().asin();
    (PI / (4.0 * theta) - 0.5).round().max(0.0) as usize
}

/// Closed-form success probability `sin²((2k+1)θ)` for one marked element.
pub fn success_probability(domain_size: usize, iterations: usize) -> f64 {
    let theta = (1.0 / domain_size as f64).sqrt().asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

/// Gates that take `register` from `|0…0⟩` to (approximately) the marked
/// element, or to the even superposition over `marked` when there are several.
pub(crate) fn search_gates(
    register: &[usize],
    marked: &[usize],
    iterations: usize,
    backend: GroverBackend,
) -> Vec<Gate> {
    match backend {
        GroverBackend::Ideal if marked.len() == 1 => register
            .iter()
            .enumerate()
            .filter(|(b, _)| (marked[0] >> b) & 1 == 1)
            .map(|(_, &q)| Gate::x(q))
            .collect(),
        GroverBackend::Ideal => vec![Gate::SubsetReflection {
            register: register.to_vec(),
            marked: marked.to_vec(),
        }],
        GroverBackend::Faithful => {
            let set: BTreeSet<usize> = marked.iter().copied().collect();
            let mut gates: Vec<Gate> = register.iter().map(|&q| Gate::h(q)).collect();
            for _ in 0..iterations {
                let set = set.clone();
                gates.push(Gate::phase_oracle(register.to_vec(), move |v| set.contains(&v)));
                gates.push(Gate::diffusion(register.to_vec()));
            }
            gates
        }
    }
}

/// Statevector probability of reading the marked element after `iterations`
/// faithful Grover iterations.
pub fn simulated_success_probability(
    domain_size: usize,
    marked: usize,
    iterations: usize,
) -> Result<f64> {
    let n = domain_qubits(domain_size)?;
    let register: Vec<usize> = (0..n).collect();
    let mut circuit = Circuit::new(n)?;
    circuit.extend(search_gates(&register, &[marked], iterations, GroverBackend::Faithful))?;
    let out = sim::run(&circuit, &StateVector::zero(n)?)?;
    Ok(out.amplitude(marked).norm_sqr())
}

/// Finds the marked element. Both backends bill the same `k` queries.
pub fn grover_search(
    oracle: &IndicatorOracle,
    config: &GroverConfig,
    rng_seed: u64,
) -> Result<(usize, QueryLedger)> {
    let n = domain_qubits(oracle.domain_size)?;
    let k = config.iterations_for(1, oracle.domain_size);
    let found = match config.backend {
        GroverBackend::Ideal => {
            oracle.counter().charge(k as u64);
            oracle.marked
        }
        GroverBackend::Faithful => {
            check_qubit_cap(n)?;
            let register: Vec<usize> = (0..n).collect();
            let mut circuit = Circuit::new(n)?;
            circuit.extend(search_gates(&register, &[oracle.marked], k, config.backend))?;
            circuit.charge(oracle.counter(), k as u64);
            let out = sim::run(&circuit, &StateVector::zero(n)?)?;
            let histogram = sim::sample_measurement(&out, &register, 1, rng_seed)?;
            *histogram.keys().next().expect("one shot yields one outcome")
        }
    };
    Ok((found, QueryLedger::oracle(k as u64)))
}

/// In-place adder `|i⟩|j⟩ ↦ |(i + j) mod 2ⁿ⟩|j⟩` on two equal-width registers.
///
/// For every addend bit `b`, increments the target register by `2^b`
/// controlled on that bit, rippling from the most significant target qubit
/// down so each carry condition still sees the old lower bits.
pub fn adder_gates(target: &[usize], addend: &[usize]) -> Vec<Gate> {
    let n = target.len();
    let mut gates = Vec::with_capacity(n * (n + 1) / 2);
    for (b, &control) in addend.iter().enumerate().take(n) {
        for k in (b..n).rev() {
            let mut controls: Vec<usize> = target[b..k].to_vec();
            controls.push(control);
            gates.push(if controls.len() == 1 {
                Gate::cnot(control, target[k])
            } else {
                Gate::mcx(controls, target[k])
            });
        }
    }
    gates
}

/// Adder on `2n` qubits: target register `0..n`, addend register `n..2n`.
pub fn adder_circuit(n: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(structural("adder needs n >= 1"));
    }
    let mut circuit = Circuit::new(2 * n)?;
    let target: Vec<usize> = (0..n).collect();
    let addend: Vec<usize> = (n..2 * n).collect();
    circuit.extend(adder_gates(&target, &addend))?;
    Ok(circuit)
}

pub(crate) fn check_interval_width(width: usize, domain_size: usize) -> Result<usize> {
    let invalid = |reason| Error::InvalidInterval {
        width,
        domain: domain_size,
        reason,
    };
    let mu = exact_log2(width).ok_or_else(|| invalid("width must be a power of two"))?;
    if width >= domain_size {
        return Err(invalid("width must be smaller than the domain"));
    }
    Ok(mu)
}

/// The four-stage interval-state feature map on `2n` qubits: Hadamards on the
/// low `log2 M` data qubits, Grover on the ancilla, add ancilla into data,
/// then undo Grover. Each execution bills `2k` queries to `oracle`.
pub fn feature_map_circuit(
    oracle: &IndicatorOracle,
    width: usize,
    config: &GroverConfig,
) -> Result<Circuit> {
    let n = domain_qubits(oracle.domain_size)?;
    let mu = check_interval_width(width, oracle.domain_size)?;
    check_qubit_cap(2 * n)?;
    let k = config.iterations_for(1, oracle.domain_size);
    let data: Vec<usize> = (0..n).collect();
    let ancilla: Vec<usize> = (n..2 * n).collect();
    let search = search_gates(&ancilla, &[oracle.marked], k, config.backend);

    let mut circuit = Circuit::new(2 * n)?;
    circuit.extend(data[..mu].iter().map(|&q| Gate::h(q)))?;
    circuit.extend(search.iter().cloned())?;
    circuit.extend(adder_gates(&data, &ancilla))?;
    circuit.extend(search.iter().rev().map(Gate::inverse))?;
    circuit.charge(oracle.counter(), 2 * k as u64);
    Ok(circuit)
}

/// `M^{-1/2} Σ_{l<M} |(j + l) mod N⟩` on `log2 N` qubits.
pub fn interval_state_analytic(start: usize, width: usize, domain_size: usize) -> Result<StateVector> {
    let n = exact_log2(domain_size)
        .filter(|&n| n >= 1)
        .ok_or_else(|| structural(format!("domain size {domain_size} is not a power of two >= 2")))?;
    if start >= domain_size {
        return Err(structural(format!("start {start} outside Z_{domain_size}")));
    }
    if width == 0 || width > domain_size {
        return Err(Error::InvalidInterval {
            width,
            domain: domain_size,
            reason: "width must lie in 1..=N",
        });
    }
    let amp = Complex64::new(1.0 / (width as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); domain_size];
    for l in 0..width {
        amps[(start + l) % domain_size] = amp;
    }
    StateVector::from_amplitudes(n, amps)
}

/// Data-register state of a feature-map output, conditioned on the ancilla
/// (all qubits from `data_qubits` up) reading zero.
#[derive(Debug, Clone)]
pub struct RegisterSplit {
    /// Normalized data-register state within the ancilla-zero branch.
    pub register: StateVector,
    /// Probability that the ancilla reads all zero.
    pub ancilla_zero_fidelity: f64,
}

pub fn split_ancilla(state: &StateVector, data_qubits: usize) -> Result<RegisterSplit> {
    if data_qubits == 0 || data_qubits > state.num_qubits() {
        return Err(structural("data register must be a nonempty prefix of the state"));
    }
    let branch: Vec<Complex64> = state.amplitudes()[..1 << data_qubits].to_vec();
    let fidelity: f64 = branch.iter().map(|a| a.norm_sqr()).sum();
    Ok(RegisterSplit {
        register: StateVector::normalized(data_qubits, branch)?,
        ancilla_zero_fidelity: fidelity,
    })
}

/// Runs the feature-map pipeline with a multi-marked oracle and returns the
/// probability that the ancilla comes back to `|0ⁿ⟩`.
///
/// With two or more marked elements the search leaves the ancilla in a
/// superposition, the adder entangles it with the data register, and the
/// inverse search cannot disentangle it: the result is strictly below 1.
pub fn multi_marked_uncompute_failure(
    oracle: &MultiMarkedOracle,
    width: usize,
    config: &GroverConfig,
) -> Result<f64> {
    let n = domain_qubits(oracle.domain_size)?;
    let mu = check_interval_width(width, oracle.domain_size)?;
    check_qubit_cap(2 * n)?;
    let marked: Vec<usize> = oracle.marked.iter().copied().collect();
    let k = config.iterations_for(marked.len(), oracle.domain_size);
    let data: Vec<usize> = (0..n).collect();
    let ancilla: Vec<usize> = (n..2 * n).collect();
    let search = search_gates(&ancilla, &marked, k, config.backend);

    let mut circuit = Circuit::new(2 * n)?;
    circuit.extend(data[..mu].iter().map(|&q| Gate::h(q)))?;
    circuit.extend(search.iter().cloned())?;
    circuit.extend(adder_gates(&data, &ancilla))?;
    circuit.extend(search.iter().rev().map(Gate::inverse))?;
    circuit.charge(&oracle.queries, 2 * k as u64);
    let out = sim::run(&circuit, &StateVector::zero(2 * n)?)?;
    sim::prob_all_zero(&out, &ancilla)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn run_feature_map(j: usize, width: usize, n_dom: usize, config: GroverConfig) -> StateVector {
        let oracle = IndicatorOracle::new(n_dom, j).unwrap();
        let c = feature_map_circuit(&oracle, width, &config).unwrap();
        sim::run(&c, &StateVector::zero(c.num_qubits()).unwrap()).unwrap()
    }

    #[test]
    fn oracle_counts_classical_queries() {
        let o = IndicatorOracle::new(8, 5).unwrap();
        assert!(!o.evaluate(4));
        assert!(o.evaluate(5));
        assert_eq!(o.query_count(), 2);
        assert!(IndicatorOracle::new(2, 0).is_err());
        assert!(IndicatorOracle::new(12, 0).is_err());
        assert!(IndicatorOracle::new(8, 8).is_err());
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(optimal_iterations(1, 4), 1);
        assert_eq!(optimal_iterations(1, 8), 2);
        assert_eq!(optimal_iterations(1, 16), 3);
        assert_eq!(optimal_iterations(16, 16), 0);
    }

    #[test]
    fn n4_search_is_exact() {
        assert_abs_diff_eq!(simulated_success_probability(4, 2, 1).unwrap(), 1.0, epsilon = 1e-12);
        let o = IndicatorOracle::new(4, 2).unwrap();
        for seed in 0..20 {
            let (found, ledger) = grover_search(&o, &GroverConfig::faithful(), seed).unwrap();
            assert_eq!(found, 2);
            assert_eq!(ledger.oracle_queries, 1);
        }
    }

    #[test]
    fn success_probabilities_match_closed_form() {
        // N=8, k=2: sin²(5·arcsin(1/√8)); N=16, k=3: sin²(7·arcsin(1/4)).
        assert_abs_diff_eq!(success_probability(8, 2), 0.9453125, epsilon = 1e-9);
        assert_abs_diff_eq!(success_probability(16, 3), 0.9613189697265625, epsilon = 1e-9);
        for (n, m) in [(8, 5), (16, 7)] {
            let k = optimal_iterations(1, n);
            let sim = simulated_success_probability(n, m, k).unwrap();
            assert_abs_diff_eq!(sim, success_probability(n, k), epsilon = 1e-12);
        }
    }

    #[test]
    fn ideal_and_faithful_search_bill_the_same() {
        let o = IndicatorOracle::new(16, 7).unwrap();
        let (a, la) = grover_search(&o, &GroverConfig::ideal(), 0).unwrap();
        let (_, lb) = grover_search(&o, &GroverConfig::faithful(), 0).unwrap();
        assert_eq!(a, 7);
        assert_eq!(la, lb);
        assert_eq!(o.query_count(), 6);
    }

    #[test]
    fn adder_examples() {
        let c = adder_circuit(4).unwrap();
        let cases = [((3, 2), (5, 2)), ((15, 1), (0, 1)), ((9, 0), (9, 0))];
        for ((i, j), (a, b)) in cases {
            let out = sim::run(&c, &StateVector::basis(8, i | j << 4).unwrap()).unwrap();
            assert_eq!(out.amplitude(a | b << 4).re, 1.0, "{i}+{j}");
        }
    }

    #[test]
    fn adder_gate_pattern_matches_four_qubit_figure() {
        let c = adder_circuit(4).unwrap();
        let summary: Vec<(Vec<usize>, usize)> = c
            .gates()
            .iter()
            .map(|g| (g.controls(), g.targets()[0]))
            .collect();
        let expected = vec![
            (vec![0, 1, 2, 4], 3),
            (vec![0, 1, 4], 2),
            (vec![0, 4], 1),
            (vec![4], 0),
            (vec![1, 2, 5], 3),
            (vec![1, 5], 2),
            (vec![5], 1),
            (vec![2, 6], 3),
            (vec![6], 2),
            (vec![7], 3),
        ];
        assert_eq!(summary, expected);
    }

    #[test]
    fn ideal_feature_map_writes_interval_and_clears_ancilla() {
        let out = run_feature_map(2, 4, 16, GroverConfig::ideal());
        for i in 0..256 {
            let expected = if (2..6).contains(&i) { 0.5 } else { 0.0 };
            assert_abs_diff_eq!(out.amplitude(i).re, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(out.amplitude(i).im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ideal_feature_map_wraps_around() {
        let out = run_feature_map(14, 4, 16, GroverConfig::ideal());
        let split = split_ancilla(&out, 4).unwrap();
        assert_abs_diff_eq!(split.ancilla_zero_fidelity, 1.0, epsilon = 1e-12);
        let analytic = interval_state_analytic(14, 4, 16).unwrap();
        assert!(split.register.max_abs_diff(&analytic) < 1e-10);
        for i in [14, 15, 0, 1] {
            assert_abs_diff_eq!(split.register.amplitude(i).re, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn faithful_feature_map_ancilla_fidelity() {
        for j in 0..16 {
            let out = run_feature_map(j, 4, 16, GroverConfig::faithful());
            let f = split_ancilla(&out, 4).unwrap().ancilla_zero_fidelity;
            assert!(f >= 1.0 - 5.0 / 16.0, "j={j}: {f}");
        }
    }

    #[test]
    fn feature_map_then_inverse_is_identity_on_data() {
        let oracle = IndicatorOracle::new(16, 11).unwrap();
        for config in [GroverConfig::ideal(), GroverConfig::faithful()] {
            let c = feature_map_circuit(&oracle, 4, &config).unwrap();
            let mut both = c.clone();
            both.append(&c.inverse()).unwrap();
            let out = sim::run(&both, &StateVector::zero(8).unwrap()).unwrap();
            assert_abs_diff_eq!(sim::prob_all_zero(&out, &[0, 1, 2, 3]).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn feature_map_bills_two_k_per_execution() {
        let oracle = IndicatorOracle::new(16, 3).unwrap();
        let c = feature_map_circuit(&oracle, 2, &GroverConfig::faithful()).unwrap();
        assert_eq!(oracle.query_count(), 0);
        sim::run(&c, &StateVector::zero(8).unwrap()).unwrap();
        assert_eq!(oracle.query_count(), 6);
    }

    #[test]
    fn feature_map_rejects_bad_widths() {
        let oracle = IndicatorOracle::new(16, 3).unwrap();
        for w in [0, 3, 16, 32] {
            assert!(matches!(
                feature_map_circuit(&oracle, w, &GroverConfig::ideal()),
                Err(Error::InvalidInterval { .. })
            ));
        }
    }

    #[test]
    fn interval_state_examples() {
        let s = interval_state_analytic(0, 1, 16).unwrap();
        assert_eq!(s.amplitude(0).re, 1.0);
        let s = interval_state_analytic(2, 4, 16).unwrap();
        for i in 0..16 {
            let e = if (2..6).contains(&i) { 0.5 } else { 0.0 };
            assert_abs_diff_eq!(s.amplitude(i).re, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn multi_marked_failure_mode() {
        let single = MultiMarkedOracle::new(16, [3]).unwrap();
        let f = multi_marked_uncompute_failure(&single, 4, &GroverConfig::ideal()).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-9);

        let pair = MultiMarkedOracle::new(16, [2, 9]).unwrap();
        let ideal = multi_marked_uncompute_failure(&pair, 4, &GroverConfig::ideal()).unwrap();
        let faithful = multi_marked_uncompute_failure(&pair, 4, &GroverConfig::faithful()).unwrap();
        // Disjoint intervals {2..5} and {9..12}: the ancilla-zero branch keeps half the weight.
        assert_abs_diff_eq!(ideal, 0.5, epsilon = 1e-9);
        assert!(faithful < 0.99, "{faithful}");

        let all = MultiMarkedOracle::new(16, 0..16).unwrap();
        let f = multi_marked_uncompute_failure(&all, 4, &GroverConfig::faithful()).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&f));
    }
}
