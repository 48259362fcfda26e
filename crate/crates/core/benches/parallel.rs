//! Rayon map against the sequential baseline on two typical scans.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gelshoot::exec::{par_map, seq_map};
use gelshoot::io::logspace;
use gelshoot::shooting::{classify, ClassifyTols};
use gelshoot::stability::{default_r, winding_number};
use gelshoot::ModelParams;

fn winding(b: &f64) -> i64 {
    let p = ModelParams::new(2.0, *b).unwrap();
    winding_number(&p, default_r(&p), 20_000).unwrap().winding
}

fn classification(b: &f64) -> &'static str {
    let p = ModelParams::new(2.0, *b).unwrap();
    classify(&p, 1e3, &ClassifyTols::default()).unwrap().class.tag()
}

fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    let bs = logspace(1.2, 8.0, 32);
    g.bench_with_input(BenchmarkId::new("winding/seq", bs.len()), &bs, |b, bs| b.iter(|| seq_map(bs, winding)));
    g.bench_with_input(BenchmarkId::new("winding/par", bs.len()), &bs, |b, bs| b.iter(|| par_map(bs, winding)));
    let bs = logspace(2.02, 8.0, 16);
    g.bench_with_input(BenchmarkId::new("classify/seq", bs.len()), &bs, |b, bs| {
        b.iter(|| seq_map(bs, classification))
    });
    g.bench_with_input(BenchmarkId::new("classify/par", bs.len()), &bs, |b, bs| {
        b.iter(|| par_map(bs, classification))
    });
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
