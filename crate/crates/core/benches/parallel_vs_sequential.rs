use ballstab::capacity::riesz_system;
use ballstab::fem::{build_mesh, lambda1_gradient_with, lambda1_with};
use ballstab::par::Execution;
use ballstab::shape::{shared_basis, RadialShape};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench(c: &mut Criterion) {
    let b2 = shared_basis(2, 8).unwrap();
    let s2 = RadialShape::from_modes(b2, &[(2, 1, 0.1), (3, -1, 0.05)]).unwrap();
    let mesh2 = build_mesh(2, 0.03).unwrap();
    let b3 = shared_basis(3, 6).unwrap();
    let s3 = RadialShape::from_modes(b3, &[(2, 0, 0.1)]).unwrap();
    let mesh3 = build_mesh(3, 0.12).unwrap();

    let mut g = c.benchmark_group("execution");
    g.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_with_input(BenchmarkId::new("lambda1_2d", name), &exec, |bch, &e| {
            bch.iter(|| lambda1_with(&s2, &mesh2, e).unwrap().lambda)
        });
        g.bench_with_input(BenchmarkId::new("lambda1_gradient_2d", name), &exec, |bch, &e| {
            bch.iter(|| lambda1_gradient_with(&s2, &mesh2, e).unwrap().1)
        });
        g.bench_with_input(BenchmarkId::new("lambda1_3d", name), &exec, |bch, &e| {
            bch.iter(|| lambda1_with(&s3, &mesh3, e).unwrap().lambda)
        });
        g.bench_with_input(BenchmarkId::new("riesz_1000", name), &exec, |bch, &e| {
            bch.iter(|| riesz_system(&s3, 1000, e).unwrap().capacity())
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
