//! The interval kernel: closed form, circuit evaluation, and shot-sampled
//! estimates, plus Gram matrix assembly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, exact_log2, structural, Error, Result};
use crate::grover::{feature_map_circuit, GroverConfig, IndicatorOracle};
use crate::ledger::QueryLedger;
use crate::seed::derive_seed;
use crate::sim::{self, StateVector};

/// `min(|i − j|, N − |i − j|)`.
pub fn cyclic_distance(i: usize, j: usize, domain_size: usize) -> usize {
    let d = i.abs_diff(j) % domain_size;
    d.min(domain_size - d)
}

fn check_kernel_args(i: usize, j: usize, width: usize, domain_size: usize) -> Result<()> {
    if i >= domain_size || j >= domain_size {
        return Err(structural(format!(
            "indices ({i}, {j}) outside Z_{domain_size}"
        )));
    }
    if width == 0 || 2 * width >= domain_size {
        return Err(Error::InvalidInterval {
            width,
            domain: domain_size,
            reason: "kernel width must satisfy 1 <= M < N/2",
        });
    }
    Ok(())
}

/// Overlap `⟨Ψ_i|Ψ_j⟩ = (M − d)/M` of two width-`M` interval states at cyclic
/// distance `d`, zero once `d ≥ M`.
pub fn interval_overlap(i: usize, j: usize, width: usize, domain_size: usize) -> Result<f64> {
    check_kernel_args(i, j, width, domain_size)?;
    let d = cyclic_distance(i, j, domain_size);
    Ok(if d <= width {
        (width - d) as f64 / width as f64
    } else {
        0.0
    })
}

/// Kernel value `|⟨Ψ_i|Ψ_j⟩|²`: the probability the kernel circuit reads the
/// all-zero string.
pub fn kernel_exact(i: usize, j: usize, width: usize, domain_size: usize) -> Result<f64> {
    Ok(interval_overlap(i, j, width, domain_size)?.powi(2))
}

/// Runs `U(x_i)` followed by `U†(x_j)` and returns the probability that the
/// data register reads all zero. Bills `2k` queries to each oracle.
pub fn kernel_circuit(
    oracle_i: &IndicatorOracle,
    oracle_j: &IndicatorOracle,
    width: usize,
    config: &GroverConfig,
) -> Result<(f64, QueryLedger)> {
    let domain = oracle_i.domain_size();
    if oracle_j.domain_size() != domain {
        return Err(structural("oracles act on different domains"));
    }
    check_kernel_args(0, 0, width, domain)?;
    let n = oracle_i.num_qubits();
    let mut circuit = feature_map_circuit(oracle_i, width, config)?;
    circuit.append(&feature_map_circuit(oracle_j, width, config)?.inverse())?;
    let queries = circuit.queries_per_run();
    let out = sim::run(&circuit, &StateVector::zero(2 * n)?)?;
    let data: Vec<usize> = (0..n).collect();
    Ok((sim::prob_all_zero(&out, &data)?, QueryLedger::oracle(queries)))
}

/// Binomial estimate of `k_true` from `shots` circuit executions.
pub fn kernel_sampled(k_true: f64, shots: u64, rng_seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(structural("shots must be at least 1"));
    }
    if !(0.0..=1.0).contains(&k_true) {
        return Err(contract(format!("kernel value {k_true} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let hits = Binomial::new(shots, k_true)
        .expect("probability checked above")
        .sample(&mut rng);
    Ok(hits as f64 / shots as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum KernelMode {
    Exact,
    CircuitIdeal,
    CircuitFaithful,
    Sampled { shots: u64 },
}

impl KernelMode {
    pub fn sampled(shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(structural("sampled mode needs at least one shot"));
        }
        Ok(KernelMode::Sampled { shots })
    }
}

/// Symmetric `m × m` kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    mode: KernelMode,
}

impl GramMatrix {
    /// Wraps explicit rows. Rejects ragged, empty or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>], mode: KernelMode) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(structural("empty Gram matrix"));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(structural("Gram matrix rows must all have length m"));
        }
        let entries = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
        let gram = Self { entries, mode };
        if !gram.is_symmetric(1e-12) {
            return Err(contract("Gram matrix is not symmetric"));
        }
        Ok(gram)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let m = self.size();
        (0..m).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Projection onto the PSD cone: negative eigenvalues set to zero.
    pub fn clipped(&self) -> GramMatrix {
        let eig = SymmetricEigen::new(self.entries.clone());
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let mut entries = &eig.eigenvectors
            * DMatrix::from_diagonal(&clipped)
            * eig.eigenvectors.transpose();
        let m = entries.nrows();
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        GramMatrix {
            entries,
            mode: self.mode,
        }
    }

    /// Row `i` as a kernel vector against every training point.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }
}

/// Fills a symmetric matrix from `value(i, j)` for `i < j`, diagonal fixed
/// at 1. Pairs are evaluated in parallel; results do not depend on order.
pub(crate) fn assemble<F>(m: usize, mode: KernelMode, value: F) -> Result<GramMatrix>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    if m == 0 {
        return Err(structural("cannot build a Gram matrix from no data"));
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| value(i, j))
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::identity(m, m);
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    Ok(GramMatrix { entries, mode })
}

/// Seed of the sampling stream for training pair `(i, j)`, `i < j`.
pub fn pair_seed(rng_seed: u64, i: usize, j: usize) -> u64 {
    derive_seed(rng_seed, &[i as u64, j as u64])
}

/// Gram matrix of the interval kernel over `data`.
///
/// Each unordered pair is evaluated once. The diagonal is 1 in every mode
/// (a normalized state overlaps itself perfectly) and is never billed.
/// Circuit modes bill queries through the circuits; sampled mode draws from
/// the analytic kernel and bills `2k` queries per shot to each oracle.
pub fn gram_matrix(
    data: &[IndicatorOracle],
    width: usize,
    mode: KernelMode,
    rng_seed: u64,
) -> Result<GramMatrix> {
    let first = data
        .first()
        .ok_or_else(|| structural("cannot build a Gram matrix from no data"))?;
    let domain = first.domain_size();
    if data.iter().any(|o| o.domain_size() != domain) {
        return Err(structural("oracles act on different domains"));
    }
    check_kernel_args(0, 0, width, domain)?;
    let exact = |i: usize, j: usize| {
        kernel_exact(
            data[i].reveal_marked(),
            data[j].reveal_marked(),
            width,
            domain,
        )
    };
    match mode {
        KernelMode::Exact => assemble(data.len(), mode, exact),
        KernelMode::CircuitIdeal | KernelMode::CircuitFaithful => {
            let config = if mode == KernelMode::CircuitIdeal {
                GroverConfig::ideal()
            } else {
                GroverConfig::faithful()
            };
            assemble(data.len(), mode, |i, j| {
                kernel_circuit(&data[i], &data[j], width, &config).map(|(v, _)| v)
            })
        }
        KernelMode::Sampled { shots } => {
            let k = crate::grover::optimal_iterations(1, domain) as u64;
            assemble(data.len(), mode, |i, j| {
                data[i].counter().charge(2 * k * shots);
                data[j].counter().charge(2 * k * shots);
                kernel_sampled(exact(i, j)?, shots, pair_seed(rng_seed, i, j))
            })
        }
    }
}

/// Validates a kernel width against a domain for callers that build kernels
/// from recovered indices.
pub fn check_width(width: usize, domain_size: usize) -> Result<()> {
    exact_log2(domain_size).ok_or_else(|| structural("domain size must be a power of two"))?;
    check_kernel_args(0, 0, width, domain_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grover::interval_state_analytic;
    use approx::assert_abs_diff_eq;

    /// Independent route: squared inner product of explicit interval states.
    fn overlap_oracle(i: usize, j: usize, width: usize, n: usize) -> f64 {
        let a = interval_state_analytic(i, width, n).unwrap();
        let b = interval_state_analytic(j, width, n).unwrap();
        a.fidelity(&b).unwrap()
    }

    fn oracles(marked: &[usize], n: usize) -> Vec<IndicatorOracle> {
        marked.iter().map(|&j| IndicatorOracle::new(n, j).unwrap()).collect()
    }

    #[test]
    fn exact_examples() {
        assert_eq!(kernel_exact(6, 6, 4, 16).unwrap(), 1.0);
        assert_eq!(interval_overlap(3, 5, 4, 16).unwrap(), 0.5);
        assert_eq!(kernel_exact(3, 5, 4, 16).unwrap(), 0.25);
        assert_eq!(kernel_exact(3, 9, 4, 16).unwrap(), 0.0);
        assert_eq!(interval_overlap(1, 15, 4, 16).unwrap(), 0.5);
        assert_eq!(kernel_exact(1, 15, 4, 16).unwrap(), overlap_oracle(1, 15, 4, 16));
    }

    #[test]
    fn exact_matches_inner_product_oracle_exhaustively() {
        for n in [8usize, 16, 32] {
            for width in (1..n / 2).filter(|w| w.is_power_of_two()) {
                for i in 0..n {
                    for j in 0..n {
                        let k = kernel_exact(i, j, width, n).unwrap();
                        assert_abs_diff_eq!(k, overlap_oracle(i, j, width, n), epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_rejects_wide_intervals() {
        assert!(matches!(kernel_exact(0, 1, 8, 16), Err(Error::InvalidInterval { .. })));
        assert!(matches!(kernel_exact(0, 1, 0, 16), Err(Error::InvalidInterval { .. })));
        assert!(kernel_exact(16, 1, 4, 16).is_err());
    }

    #[test]
    fn circuit_examples_and_ledger() {
        let o = oracles(&[3, 5], 16);
        let (same, _) = kernel_circuit(&o[0], &o[0], 4, &GroverConfig::ideal()).unwrap();
        assert_abs_diff_eq!(same, 1.0, epsilon = 1e-10);
        let (ideal, ledger) = kernel_circuit(&o[0], &o[1], 4, &GroverConfig::ideal()).unwrap();
        assert_abs_diff_eq!(ideal, overlap_oracle(3, 5, 4, 16), epsilon = 1e-10);
        assert_eq!(ledger.oracle_queries, 12);
        let (faithful, _) = kernel_circuit(&o[0], &o[1], 4, &GroverConfig::faithful()).unwrap();
        assert!((faithful - 0.25).abs() <= 5.0 / 16.0);
        // 2k = 6 per feature map; the i = j circuit bills oracle 0 twice.
        assert_eq!(o[1].query_count(), 12);
        assert_eq!(o[0].query_count(), 24);
    }

    #[test]
    fn sampled_endpoints_and_errors() {
        assert_eq!(kernel_sampled(1.0, 17, 3).unwrap(), 1.0);
        assert_eq!(kernel_sampled(0.0, 17, 3).unwrap(), 0.0);
        assert!(kernel_sampled(1.5, 10, 0).is_err());
        assert!(kernel_sampled(0.5, 0, 0).is_err());
    }

    #[test]
    fn sampled_variance_at_half() {
        let draws: Vec<f64> = (0..20_000)
            .map(|s| kernel_sampled(0.5, 100, s).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        // Var of the sample variance is ~2σ⁴/n; 0.0025·√(2/20000) ≈ 2.5e-5.
        assert!((var - 0.0025).abs() < 1.5e-4, "{var}");
    }

    #[test]
    fn sampled_estimator_is_unbiased() {
        for k_true in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let shots = 300u64;
            let draws = 10_000;
            let mean = (0..draws)
                .map(|s| kernel_sampled(k_true, shots, s as u64 * 7 + 1).unwrap())
                .sum::<f64>()
                / draws as f64;
            let sigma = (k_true * (1.0 - k_true) / shots as f64 / draws as f64).sqrt();
            assert!((mean - k_true).abs() <= 4.0 * sigma + 1e-15, "{k_true}: {mean}");
        }
    }

    #[test]
    fn gram_examples() {
        let g = gram_matrix(&oracles(&[5], 16), 4, KernelMode::Exact, 0).unwrap();
        assert_eq!(g.entries(), &DMatrix::from_element(1, 1, 1.0));
        let g = gram_matrix(&oracles(&[0, 2, 8], 16), 4, KernelMode::Exact, 0).unwrap();
        let expected = [[1.0, 0.25, 0.0], [0.25, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.get(i, j), expected[i][j]);
            }
        }
        assert!(gram_matrix(&[], 4, KernelMode::Exact, 0).is_err());
    }

    #[test]
    fn sampled_gram_concentrates_and_is_symmetric() {
        let data = oracles(&[0, 1, 3, 6, 9, 12, 14], 16);
        let exact = gram_matrix(&data, 4, KernelMode::Exact, 0).unwrap();
        let sampled = gram_matrix(&data, 4, KernelMode::sampled(10_000_000).unwrap(), 11).unwrap();
        let dev = (exact.entries() - sampled.entries()).abs().max();
        assert!(dev < 0.002, "{dev}");
        assert!(sampled.is_symmetric(0.0));
        // Per-pair streams: the same seed reproduces the same matrix.
        let again = gram_matrix(&data, 4, KernelMode::sampled(10_000_000).unwrap(), 11).unwrap();
        assert_eq!(sampled, again);
    }

    #[test]
    fn sampled_gram_bills_four_k_per_shot_per_pair() {
        let data = oracles(&[0, 4, 8], 16);
        gram_matrix(&data, 4, KernelMode::sampled(10).unwrap(), 1).unwrap();
        let total: u64 = data.iter().map(|o| o.query_count()).sum();
        assert_eq!(total, 3 * 10 * 4 * 3);
    }

    #[test]
    fn circuit_gram_modes_agree_with_exact() {
        let data = oracles(&[1, 2, 7, 15], 16);
        let exact = gram_matrix(&data, 4, KernelMode::Exact, 0).unwrap();
        let ideal = gram_matrix(&data, 4, KernelMode::CircuitIdeal, 0).unwrap();
        let faithful = gram_matrix(&data, 4, KernelMode::CircuitFaithful, 0).unwrap();
        assert!((exact.entries() - ideal.entries()).abs().max() < 1e-10);
        assert!((exact.entries() - faithful.entries()).abs().max() <= 5.0 / 16.0);
    }

    #[test]
    fn clipping_removes_negative_eigenvalues() {
        let g = GramMatrix::from_rows(
            &[vec![1.0, 0.9, 0.0], vec![0.9, 1.0, 0.9], vec![0.0, 0.9, 1.0]],
            KernelMode::Exact,
        )
        .unwrap();
        assert!(g.min_eigenvalue() < 0.0);
        let c = g.clipped();
        assert!(c.min_eigenvalue() > -1e-12);
        assert!(c.is_symmetric(0.0));
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        assert!(matches!(
            GramMatrix::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]], KernelMode::Exact),
            Err(Error::ContractViolation(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn exact_gram_is_psd(
                marked in proptest::collection::vec(0usize..256, 1..64),
                mu in 0u32..7,
            ) {
                let data = oracles(&marked, 256);
                let g = gram_matrix(&data, 1 << mu, KernelMode::Exact, 0).unwrap();
                prop_assert!(g.min_eigenvalue() >= -1e-8);
                prop_assert!(g.is_symmetric(0.0));
                prop_assert!((0..g.size()).all(|i| g.get(i, i) == 1.0));
            }
        }
    }
}
