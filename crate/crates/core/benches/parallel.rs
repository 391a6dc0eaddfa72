use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plemelj_core::cauchy::{build_sio, operator_norm, Space};
use plemelj_core::geometry::{build_curve, CurveSpec};
use plemelj_core::regularity::{scale_window, RegularityTables, DEFAULT_SEED};
use plemelj_core::sobolev::douglas_gram;
use std::hint::black_box;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()),
    ]
}

fn bench(c: &mut Criterion) {
    let ellipse = build_curve(&CurveSpec::Ellipse { a: 2.0, b: 1.0 }, 256).unwrap();
    let koch = build_curve(&CurveSpec::Koch { level: 3, side: 1.0 }, 192).unwrap();
    let mut group = c.benchmark_group("exec");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("douglas_gram", label), &ellipse, |b, curve| {
            b.iter(|| pool.install(|| black_box(douglas_gram(curve, 0.5).unwrap())))
        });
        group.bench_with_input(BenchmarkId::new("sio_l2_norm", label), &ellipse, |b, curve| {
            b.iter(|| pool.install(|| black_box(operator_norm(&build_sio(curve).unwrap(), Space::L2).unwrap())))
        });
        group.bench_with_input(BenchmarkId::new("regularity_tables", label), &koch, |b, curve| {
            b.iter(|| pool.install(|| black_box(RegularityTables::new(curve, &scale_window(curve), 64, DEFAULT_SEED).unwrap())))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
