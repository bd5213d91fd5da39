//! Fixtures shared by the criterion benches.

use qsvm_core::grover::IndicatorOracle;
use qsvm_core::learn::{generate_dataset, Concept, Dataset};

/// Seeded training set on `Z_N` with a fixed concept.
pub fn dataset(domain_size: usize, m: usize, seed: u64) -> Dataset {
    let concept = Concept::new(domain_size / 4, domain_size).expect("concept");
    generate_dataset(&concept, m, seed).expect("dataset")
}

pub fn oracle_pair(domain_size: usize, i: usize, j: usize) -> (IndicatorOracle, IndicatorOracle) {
    (
        IndicatorOracle::new(domain_size, i).expect("oracle"),
        IndicatorOracle::new(domain_size, j).expect("oracle"),
    )
}
