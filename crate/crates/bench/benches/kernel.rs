use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use eclqr_bench::kernel_batch;
use eclqr_core::linalg::eliminate_block;

fn eliminate(c: &mut Criterion) {
    let batch = kernel_batch(200, 6, 1);
    c.bench_function("eliminate_block/full", |b| {
        b.iter(|| {
            for sys in &batch {
                black_box(eliminate_block(sys, sys.cols()).unwrap());
            }
        })
    });
    c.bench_function("eliminate_block/half", |b| {
        b.iter(|| {
            for sys in &batch {
                black_box(eliminate_block(sys, sys.cols() / 2).unwrap());
            }
        })
    });
}

criterion_group!(benches, eliminate);
criterion_main!(benches);
