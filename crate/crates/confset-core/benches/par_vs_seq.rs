use confset_core::exec::{run_replicates, run_replicates_seq};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use rand_distr::StandardNormal;
use std::hint::black_box;

/// A critical-value-style replicate: simulate n observations and take the
/// sup over all lags of the absolute prefix-sum increment.
fn replicate_workload(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for _ in 0..n {
        let eps: f64 = rng.sample(StandardNormal);
        acc += 2.0 * eps + eps * eps - 1.0;
        prefix.push(acc);
    }
    let mut sup: f64 = 0.0;
    for d in 1..=n {
        for j in 0..=(n - d) {
            sup = sup.max((prefix[j + d] - prefix[j]).abs() / (d as f64).sqrt());
        }
    }
    sup
}

fn bench_replicates(c: &mut Criterion) {
    let n = 128;
    let reps = 200u64;
    let mut group = c.benchmark_group("replicates");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(run_replicates(7, reps, |_, rng| replicate_workload(n, rng))))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(run_replicates_seq(7, reps, |_, rng| replicate_workload(n, rng))))
    });
    group.finish();
}

criterion_group!(benches, bench_replicates);
criterion_main!(benches);
