use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use exner_bench::{conical_dune, order_study};
use exner_core::harness::SolverKind;
use exner_core::numerics::{solve_spd, CgOptions, FivePointSystem};

fn steps_1d(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_1d");
    for n in [200, 800, 3200] {
        let (mut s, u, dt) = order_study(n, SolverKind::ExplicitO2);
        group.bench_with_input(BenchmarkId::new("explicit_rk2", n), &n, |b, _| {
            b.iter(|| s.step_explicit_rk2(black_box(&u), 0.0, dt).unwrap())
        });
        let (mut s, u, dt) = order_study(n, SolverKind::Imex2);
        group.bench_with_input(BenchmarkId::new("imex2", n), &n, |b, _| {
            b.iter(|| s.step_imex2(black_box(&u), 0.0, dt).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("semi_o1", n), &n, |b, _| {
            b.iter(|| s.step_semi_implicit_o1(black_box(&u), 0.0, dt).unwrap())
        });
    }
    group.finish();
}

fn steps_2d(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_2d");
    group.sample_size(10);
    for n in [50, 100] {
        let (mut s, u, dt) = conical_dune(n);
        group.bench_with_input(BenchmarkId::new("imex2d", n), &n, |b, _| {
            b.iter(|| s.step2d_imex2(black_box(&u), dt).unwrap())
        });
    }
    group.finish();
}

fn cg(c: &mut Criterion) {
    let n = 100;
    let mut sys = FivePointSystem::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let mut center = 1.0;
            for (cond, slot) in [(i > 0, &mut sys.west), (i + 1 < n, &mut sys.east), (j > 0, &mut sys.south), (j + 1 < n, &mut sys.north)] {
                if cond {
                    slot[k] = -50.0;
                    center += 50.0;
                }
            }
            sys.center[k] = center;
            sys.rhs[k] = ((i * 7 + j * 13) % 11) as f64;
        }
    }
    let opts = CgOptions { tol: 1e-10, max_iter: 10_000, jacobi: true };
    c.bench_function("cg_100x100", |b| b.iter(|| solve_spd(black_box(&sys), &opts).unwrap()));
}

criterion_group!(benches, steps_1d, steps_2d, cg);
criterion_main!(benches);
