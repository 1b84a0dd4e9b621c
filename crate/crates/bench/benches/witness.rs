use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entwit_bench::noisy_state;
use entwit_core::fisher::local_fisher_matrix;
use entwit_core::state::DEFAULT_EIGEN_CUTOFF;
use entwit_core::{hierarchy_report, OptimizerConfig};

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_decomposition");
    for k in [1, 2, 3] {
        let rho = noisy_state(k);
        g.bench_with_input(BenchmarkId::from_parameter(3 * k), &rho, |b, rho| {
            b.iter(|| rho.spectral_decomposition(DEFAULT_EIGEN_CUTOFF).unwrap())
        });
    }
    g.finish();
}

fn fisher_matrix(c: &mut Criterion) {
    let mut g = c.benchmark_group("local_fisher_matrix");
    for k in [1, 2, 3] {
        let rho = noisy_state(k);
        g.bench_with_input(BenchmarkId::from_parameter(3 * k), &rho, |b, rho| b.iter(|| local_fisher_matrix(rho)));
    }
    g.finish();
}

fn report(c: &mut Criterion) {
    let mut g = c.benchmark_group("hierarchy_report");
    g.sample_size(10);
    let config = OptimizerConfig::default();
    for k in [1, 2] {
        let rho = noisy_state(k);
        g.bench_with_input(BenchmarkId::from_parameter(3 * k), &rho, |b, rho| {
            b.iter(|| hierarchy_report(rho, &config).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, spectral, fisher_matrix, report);
criterion_main!(benches);
