use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use daesa_core::random::random_nonsingular_graph;
use daesa_core::{
    array_index_search, dm_decompose, find_offsets, max_cardinality_matching, pantelides_offsets,
    parse, resolve_conflicts, unfold_mode_change, ModeChange,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SIZES: [usize; 3] = [10, 100, 1000];

/// Sparse enough to stay realistic: about four incidences per equation.
fn density(n: usize) -> f64 {
    (4.0 / n as f64).min(0.5)
}

fn matching_and_dm(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    for n in SIZES {
        let g = random_nonsingular_graph(&mut ChaCha8Rng::seed_from_u64(1), n, density(n), 0);
        group.bench_with_input(BenchmarkId::new("matching", n), &g, |b, g| {
            b.iter(|| max_cardinality_matching(g))
        });
        group.bench_with_input(BenchmarkId::new("dm", n), &g, |b, g| {
            b.iter(|| dm_decompose(g))
        });
    }
    group.finish();
}

fn offsets(c: &mut Criterion) {
    let mut group = c.benchmark_group("offsets");
    for n in SIZES {
        let g = random_nonsingular_graph(&mut ChaCha8Rng::seed_from_u64(2), n, density(n), 2);
        group.bench_with_input(BenchmarkId::new("sigma", n), &g, |b, g| {
            b.iter(|| find_offsets(g).unwrap())
        });
    }
    for n in [10, 50] {
        let g = random_nonsingular_graph(&mut ChaCha8Rng::seed_from_u64(3), n, density(n), 1);
        group.bench_with_input(BenchmarkId::new("pantelides", n), &g, |b, g| {
            b.iter(|| pantelides_offsets(g).unwrap())
        });
    }
    group.finish();
}

fn corpus(c: &mut Criterion) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models");
    let read = |f: &str| parse(&std::fs::read_to_string(format!("{dir}/{f}")).unwrap()).unwrap();
    let pendulum = read("pendulum.dae");
    c.bench_function("array/pendulum", |b| {
        b.iter(|| array_index_search(&pendulum, None).unwrap())
    });
    let clutch = read("clutch.dae");
    let change = ModeChange::new("g=false".parse().unwrap(), "g=true".parse().unwrap()).unwrap();
    c.bench_function("modechange/clutch", |b| {
        b.iter(|| resolve_conflicts(&unfold_mode_change(&clutch, &change).unwrap()).unwrap())
    });
}

criterion_group!(benches, matching_and_dm, offsets, corpus);
criterion_main!(benches);
