use std::hint::black_box;

use carleman_bench::{identity_cases, test_matrix, wave_fixture};
use carleman_core::field_kit::{fd_apply, FdOp};
use carleman_core::identity::identity_residual;
use carleman_core::solver::{step, Coef, Coefficients};
use carleman_core::weights::eval_frame;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn frames(c: &mut Criterion) {
    let cases = identity_cases(16);
    c.bench_function("eval_frame/16", |b| {
        b.iter(|| {
            for k in &cases {
                black_box(eval_frame(&k.rho, &k.varrho, &k.point, &k.params).unwrap());
            }
        })
    });
    c.bench_function("identity_residual/16", |b| {
        b.iter(|| {
            for k in &cases {
                black_box(identity_residual(&k.w, &k.family(), &k.point).unwrap());
            }
        })
    });
}

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("min_eigenvalue");
    for n in [1, 2, 3] {
        let m = test_matrix(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| black_box(m.min_eigenvalue())));
    }
    g.finish();
}

fn solver(c: &mut Criterion) {
    let coeffs = Coefficients { b1: Coef::Const(0.5), ..Coefficients::zero() };
    let mut g = c.benchmark_group("step_2d");
    for cells in [50, 100] {
        let (grid, state) = wave_fixture(cells);
        g.bench_with_input(BenchmarkId::from_parameter(cells), &state, |b, s| {
            b.iter(|| black_box(step(s, &coeffs, 0.01, &grid).unwrap()))
        });
    }
    g.finish();
    let (grid, state) = wave_fixture(100);
    let mid = grid.node_count() / 2;
    c.bench_function("fd_apply/laplacian", |b| b.iter(|| black_box(fd_apply(&state.u, FdOp::Laplacian, mid).unwrap())));
}

criterion_group!(benches, frames, eigen, solver);
criterion_main!(benches);
