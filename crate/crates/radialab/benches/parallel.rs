//! Parallel-vs-sequential comparison for the hot paths: magnitude sampling
//! and law construction. The sampler is counter-keyed, so both variants
//! produce identical output and the benchmark isolates pure scheduling
//! cost.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use radialab::distributions::build_law;
use radialab::exec;
use radialab::sampling::{sample_magnitudes, sample_magnitudes_seq};
use radialab::shapes::ShapeSpec;

fn magnitude_sampling(c: &mut Criterion) {
    let law = build_law(&ShapeSpec::gaussian(), 100.0, 1e-10).unwrap();
    let mut group = c.benchmark_group("sample_magnitudes");
    for n in [20_000usize, 100_000] {
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| sample_magnitudes_seq(&law, n, 42, 0));
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| sample_magnitudes(&law, n, 42, 0));
        });
    }
    group.finish();
}

fn worker_scaling(c: &mut Criterion) {
    let law = build_law(&ShapeSpec::gaussian(), 100.0, 1e-10).unwrap();
    let n = 100_000;
    let mut group = c.benchmark_group("worker_scaling");
    group.throughput(Throughput::Elements(n as u64));
    for workers in [1usize, 8] {
        group.bench_with_input(
            BenchmarkId::from_parameter(workers),
            &workers,
            |b, &w| {
                // Pool construction sits inside the measurement, matching
                // what one CLI invocation pays under RADIALAB_THREADS.
                b.iter(|| exec::with_threads(w, || sample_magnitudes(&law, n, 42, 0)));
            },
        );
    }
    group.finish();
}

fn law_construction(c: &mut Criterion) {
    let shape = ShapeSpec::gaussian();
    let mut group = c.benchmark_group("build_law");
    group.sample_size(20);
    for d in [100.0, 10_000.0] {
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| build_law(&shape, d, 1e-10).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, magnitude_sampling, worker_scaling, law_construction);
criterion_main!(benches);
