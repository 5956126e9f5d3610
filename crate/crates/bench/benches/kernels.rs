use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use std::hint::black_box;
use topomode::fem::assemble_core;
use topomode::mesh::reference_quadrature;
use topomode::sensitivity::{compute_spectrum, stationary_g, ControlNorm, NormOperator, ResponseNorm};
use topomode::tangent::TangentOperators;
use topomode_bench::{spun_up, square_dofmap, square_model, DAY};

fn assembly(c: &mut Criterion) {
    let dofmap = square_dofmap();
    let rule = reference_quadrature(4).unwrap();
    c.bench_function("assemble_core_445", |b| {
        b.iter(|| assemble_core(black_box(&dofmap), &rule).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let m = square_model(500.0);
    let s = spun_up(&m, 30.0);
    c.bench_function("tendency_445", |b| b.iter(|| m.tendency(black_box(&s.omega)).unwrap()));
}

fn tangent(c: &mut Criterion) {
    let m = square_model(500.0);
    let s = spun_up(&m, 30.0);
    let op = TangentOperators::new(&m, &s).unwrap();
    let block = DMatrix::from_fn(m.n(), 32, |i, j| ((i * 7 + j * 13) % 17) as f64 - 8.0);
    c.bench_function("apply_b_block_32", |b| b.iter(|| op.apply_b_block(black_box(&block))));
    let a_block = block.rows(0, m.n0()).into_owned();
    c.bench_function("apply_a_block_32", |b| b.iter(|| op.apply_a_block(black_box(&a_block))));
}

fn sensitivity(c: &mut Criterion) {
    let m = square_model(3000.0);
    let s = spun_up(&m, 100.0);
    let op = TangentOperators::new(&m, &s).unwrap();
    let (a, bm) = (op.dense_a(), op.dense_b());
    let norm = NormOperator::new(&m, ResponseNorm::Enstrophy, ControlNorm::Mass).unwrap();
    let mut group = c.benchmark_group("sensitivity");
    group.sample_size(10);
    group.bench_function("stationary_g_1day", |b| {
        b.iter(|| stationary_g(black_box(&a), &bm, DAY).unwrap())
    });
    let g = stationary_g(&a, &bm, DAY).unwrap();
    group.bench_function("spectrum_445", |b| b.iter(|| compute_spectrum(black_box(&g), &norm).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, dynamics, tangent, sensitivity);
criterion_main!(benches);
