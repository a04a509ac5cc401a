use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use saffron_core::density::Variant;
use saffron_core::harness::ExperimentConfig;
use saffron_core::peeling::detect_singleton;
use saffron_core::{measure, peel, BlockCode, MeasurementSet, PoolDesign, ReedSolomon, SignatureCode, SupportVector};

fn instance(log2_n: u32, k: usize) -> (PoolDesign, MeasurementSet) {
    let n = 1u64 << log2_n;
    let mut cfg = ExperimentConfig::new(Variant::Saffron, n, k);
    cfg.d = Some(12);
    cfg.eps = Some(1e-6);
    let design = cfg.resolve().unwrap().design_for(0).unwrap();
    let x = SupportVector::sample(n, k, 7).unwrap();
    let ms = measure(&design, &x).unwrap();
    (design, ms)
}

fn peel_by_k(c: &mut Criterion) {
    let mut group = c.benchmark_group("peel_by_k");
    for k in [32, 128, 512, 1024] {
        let (design, ms) = instance(32, k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| peel(black_box(&ms), &design).unwrap())
        });
    }
    group.finish();
}

fn peel_by_log2_n(c: &mut Criterion) {
    let mut group = c.benchmark_group("peel_by_log2_n");
    for log2_n in [16, 20, 24, 28, 32] {
        let (design, ms) = instance(log2_n, 32);
        group.bench_with_input(BenchmarkId::from_parameter(log2_n), &log2_n, |b, _| {
            b.iter(|| peel(black_box(&ms), &design).unwrap())
        });
    }
    group.finish();
}

fn singleton_detection(c: &mut Criterion) {
    let (design, _) = instance(32, 1);
    let spec = design.signature().clone();
    let column = spec.column(123_456_789);
    c.bench_function("detect_singleton_n2^32", |b| b.iter(|| detect_singleton(black_box(&column), &spec)));
}

fn reed_solomon(c: &mut Criterion) {
    let rs = ReedSolomon::new(4, 12).unwrap();
    let clean = rs.encode(&[0x12, 0x34, 0x56, 0x78]).unwrap();
    let mut noisy = clean.clone();
    noisy[1] ^= 0x5a;
    noisy[7] ^= 0x01;
    noisy[10] ^= 0xff;
    let mut group = c.benchmark_group("reed_solomon_12_4");
    group.bench_function("decode_clean", |b| b.iter(|| rs.decode(black_box(&clean))));
    group.bench_function("decode_three_errors", |b| b.iter(|| rs.decode(black_box(&noisy))));
    group.finish();
}

criterion_group!(benches, peel_by_k, peel_by_log2_n, singleton_detection, reed_solomon);
criterion_main!(benches);
