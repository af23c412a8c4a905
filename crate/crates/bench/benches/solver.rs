use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use flatfw_bench::problem;
use flatfw_cli::scenarios::penetration;
use flatfw_core::gradients::finite_difference_gradient;
use flatfw_core::precond::Preconditioner;
use flatfw_core::{solve, SolverConfig};

const SEGMENTS: [usize; 4] = [5, 10, 20, 40];

fn gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient");
    for n in SEGMENTS {
        let p = problem(n, 0);
        let mut grad = vec![0.0; p.x0.len()];
        g.bench_with_input(BenchmarkId::new("analytic", n), &n, |b, _| {
            b.iter(|| p.objective.value_and_gradient(black_box(&p.x0), &mut grad).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("finite_difference", n), &n, |b, _| {
            b.iter(|| finite_difference_gradient(&p.objective, black_box(&p.x0), 1e-6, &mut grad).unwrap())
        });
    }
    g.finish();
}

fn preconditioner(c: &mut Criterion) {
    let mut g = c.benchmark_group("preconditioner");
    for n in SEGMENTS {
        let p = problem(n, 0);
        let grad = |x: &[f64], g: &mut [f64]| p.objective.value_and_gradient(x, g).map(|c| c.total);
        g.bench_with_input(BenchmarkId::new("build", n), &n, |b, _| b.iter(|| Preconditioner::build(grad, &p.x0, n - 1, 12).unwrap()));
        let m = Preconditioner::build(grad, &p.x0, n - 1, 12).unwrap();
        let mut v = p.x0.clone();
        g.bench_with_input(BenchmarkId::new("apply", n), &n, |b, _| b.iter(|| m.apply(black_box(&mut v))));
    }
    g.finish();
}

fn solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    let scenario = penetration();
    g.bench_function("penetration", |b| b.iter(|| solve(&scenario, &SolverConfig::default()).unwrap()));
    for n in [5usize, 25] {
        let p = problem(n, 0);
        g.bench_with_input(BenchmarkId::new("group1", n), &n, |b, _| b.iter(|| p.run()));
    }
    g.finish();
}

criterion_group!(benches, gradient, preconditioner, solves);
criterion_main!(benches);
