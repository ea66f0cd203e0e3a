use criterion::{criterion_group, criterion_main, Criterion};
use udyn_core::exact::{absorption_table, build_kernel, KernelKind};

fn bench_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    group.bench_function("build_kernel/30", |b| b.iter(|| build_kernel(30, KernelKind::Plain).unwrap()));
    let k = build_kernel(30, KernelKind::Plain).unwrap();
    group.bench_function("absorption/30", |b| b.iter(|| absorption_table(&k).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_kernel);
criterion_main!(benches);
