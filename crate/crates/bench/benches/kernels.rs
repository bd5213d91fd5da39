use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qsvm_bench::{dataset, oracle_pair};
use qsvm_core::grover::GroverConfig;
use qsvm_core::kernel::{gram_matrix, kernel_circuit, KernelMode};
use qsvm_core::pattern::{pattern_match, TextInstance};
use qsvm_core::svm;

fn kernel_circuits(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_circuit");
    for n in [16usize, 64, 256] {
        let (a, b) = oracle_pair(n, 1, n / 2 + 3);
        for (name, config) in [("ideal", GroverConfig::ideal()), ("faithful", GroverConfig::faithful())] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |bench, _| {
                bench.iter(|| kernel_circuit(black_box(&a), black_box(&b), 4, &config).unwrap())
            });
        }
    }
    group.finish();
}

fn gram_and_train(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram_train");
    for m in [16usize, 64] {
        let data = dataset(1024, m, 3);
        group.bench_with_input(BenchmarkId::new("sampled_gram", m), &m, |bench, _| {
            bench.iter(|| gram_matrix(&data.oracles, 32, KernelMode::Sampled { shots: 1 << 24 }, 9).unwrap())
        });
        let gram = gram_matrix(&data.oracles, 32, KernelMode::Exact, 0).unwrap();
        group.bench_with_input(BenchmarkId::new("smo", m), &m, |bench, _| {
            bench.iter(|| svm::train(black_box(&gram), &data.labels, 1.0, 1e-6).unwrap())
        });
    }
    group.finish();
}

fn matcher(c: &mut Criterion) {
    let inst = TextInstance::parse("1011001000011110", "1100").unwrap();
    c.bench_function("pattern_match_n16", |bench| {
        bench.iter(|| pattern_match(black_box(&inst), &GroverConfig::faithful(), 1).unwrap())
    });
}

criterion_group!(benches, kernel_circuits, gram_and_train, matcher);
criterion_main!(benches);
