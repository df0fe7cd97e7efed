use std::hint::black_box;

use caloric_core::structure::{chain_space_dimension, harmonic_polynomial_basis, solve_hierarchy};
use caloric_core::{LatticePolynomial, Mode};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_harmonic(c: &mut Criterion) {
    let mut group = c.benchmark_group("harmonic_basis");
    for (d, j) in [(2usize, 4u32), (2, 8), (3, 4)] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("d{d}_j{j}")), &(d, j), |b, &(d, j)| {
            b.iter(|| harmonic_polynomial_basis(black_box(d), black_box(j)).unwrap())
        });
    }
    group.finish();
}

fn bench_chain_dimension(c: &mut Criterion) {
    c.bench_function("chain_dimension_d3_k2", |b| {
        b.iter(|| chain_space_dimension(black_box(3), 4, 2, Mode::Discrete).unwrap())
    });
}

fn bench_hierarchy(c: &mut Criterion) {
    let top = LatticePolynomial::parse(2, "x^3 - 3*x*y^2").unwrap();
    c.bench_function("solve_hierarchy_l3", |b| {
        b.iter(|| solve_hierarchy(black_box(&top), 3, Mode::Continuous).unwrap())
    });
}

criterion_group!(benches, bench_harmonic, bench_chain_dimension, bench_hierarchy);
criterion_main!(benches);
