use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use repairkit::oracle::bf_topk;
use repairkit::{build_tree, ff_topk, rp_topk};
use repairkit_bench::bench_instance;

fn bench_build(c: &mut Criterion) {
    let (ds, query, constraints) = bench_instance(10_000);
    c.bench_function("build_tree_10k", |b| {
        b.iter(|| build_tree(&ds, &query, &constraints, 5, 15).unwrap())
    });
}

fn bench_search(c: &mut Criterion) {
    let (ds, query, constraints) = bench_instance(10_000);
    let tree = build_tree(&ds, &query, &constraints, 5, 15).unwrap();
    let mut group = c.benchmark_group("topk_10k");
    group.bench_function(BenchmarkId::new("ff", 7), |b| {
        b.iter(|| ff_topk(&tree, &ds, &query, &constraints, 7).unwrap())
    });
    group.bench_function(BenchmarkId::new("rp", 7), |b| {
        b.iter(|| rp_topk(&tree, &ds, &query, &constraints, 7, 2).unwrap())
    });
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("bf", 7), |b| {
        b.iter(|| bf_topk(&ds, &query, &constraints, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_build, bench_search);
criterion_main!(benches);
